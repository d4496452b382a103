use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use snakeweaver_cli::{run, Cli, SCHEMA_VERSION};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let body = if cli.global.json {
                serde_json::to_string_pretty(&out.json).expect("valid JSON")
            } else {
                out.text
            };
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            ExitCode::from(out.code)
        }
        Err(e) => {
            if cli.global.json {
                let body = serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "error": e.to_string(),
                    "exit_code": e.exit_code(),
                });
                println!("{body}");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
