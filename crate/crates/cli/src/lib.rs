//! Command-line front end: marginal-file checks, snakes, reconstruction, entropies and generators.
//!
//! Exit codes: 0 pass, 1 condition failure, 2 input error, 3 dimension guard.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use snakeweaver::ci::{derive, level1_snake_target, localized_axioms};
use snakeweaver::format::{MatrixData, FORMAT_VERSION};
use snakeweaver::marginals::{check_local_consistency, check_markov_conditions};
use snakeweaver::operator::MAX_DENSE_DIM;
use snakeweaver::oracles::{gen_ghz_row, gen_product, LineMarkovState, Orientation, SiteSpec};
use snakeweaver::oracles::random::rng;
use snakeweaver::reconstruct::{formula_terms, reconstruct_global_with, row_path_med, ReconstructOptions};
use snakeweaver::snakes::{build_snake, snake_entropy_med, verify_is_snake};
use snakeweaver::{
    CheckKind, CheckReport, Error, LogBase, MarginalFile, MarginalSet, SnakeSpec, Tolerances, Variant, Vertex,
    Window,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Smallest accepted `--max-dim`.
pub const MIN_GUARD: usize = 1 << 6;

pub mod exit {
    pub const PASS: u8 = 0;
    pub const FAIL: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const GUARD: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Guard(_) => exit::GUARD,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionGuard { .. } => CliError::Guard(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "snakeweaver", version, about = "Check, merge and reconstruct 2D lattice states from 3x3 marginals")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_log_base(s: &str) -> std::result::Result<LogBase, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_vertex(s: &str) -> std::result::Result<Vertex, String> {
    let (x, y) = s
        .trim_matches(|c| c == '(' || c == ')')
        .split_once(',')
        .ok_or_else(|| format!("expected x,y but got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Vertex::new(parse(x)?, parse(y)?))
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Tolerance on conditional mutual information (bits).
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_cmi: f64,
    /// Tolerance on trace distances between overlapping marginals.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_consistency: f64,
    /// Tolerance on reconstruction-level equalities.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol_reconstruction: f64,
    /// Unit of reported entropies: 2 (bits) or e (nats).
    #[arg(long, global = true, default_value = "2", value_parser = parse_log_base)]
    pub log_base: LogBase,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print a machine-readable report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, env = "SNAKEWEAVER_THREADS")]
    pub threads: Option<usize>,
    /// Largest dense dimension a command may materialize.
    #[arg(long, global = true, default_value_t = MAX_DENSE_DIM)]
    pub max_dim: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Independent sites (see --site-state).
    Product,
    /// Independent Markov chains along rows, rotated on site.
    RowMarkov,
    /// Independent Markov chains along columns, rotated on site.
    ColumnMarkov,
    /// Perfectly correlated classical rows.
    Repetition,
    /// A three-site GHZ state on the bottom row; violates the Markov conditions.
    GhzRow,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteState {
    Zero,
    Mixed,
    Random,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Local consistency and the Markov conditions of every cluster.
    Check {
        file: PathBuf,
        /// Compare every overlapping pair of clusters, not just adjacent ones.
        #[arg(long)]
        all_pairs: bool,
    },
    /// Build the global state by merging level-2 snakes bottom to top.
    Reconstruct {
        file: PathBuf,
        /// Reconstruct even if the checks fail.
        #[arg(long)]
        force: bool,
        /// Only evaluate the entropy formula and MED.
        #[arg(long)]
        formula_only: bool,
        /// Record the vertical CMI after each merge.
        #[arg(long)]
        step_cmi: bool,
        /// Write the reconstructed state as JSON.
        #[arg(long)]
        output_state: Option<PathBuf>,
    },
    /// Maximum-entropy formula, row-path MED and the per-vertex term table.
    Entropy { file: PathBuf },
    /// Write a marginal file from a test-state generator.
    Generate {
        #[arg(value_enum)]
        kind: GeneratorKind,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 2)]
        local_dim: usize,
        #[arg(long, value_enum, default_value_t = SiteState::Random)]
        site_state: SiteState,
        /// Skip the random on-site unitaries of the Markov generators.
        #[arg(long)]
        no_rotate: bool,
        /// Depolarize the marginal of the cluster anchored here.
        #[arg(long, value_parser = parse_vertex)]
        depolarize_at: Option<Vertex>,
        #[arg(long, default_value_t = 1e-3)]
        depolarize_p: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the dense global state.
        #[arg(long)]
        global_state: Option<PathBuf>,
    },
    /// Build one snake and report its entropy.
    Snake {
        file: PathBuf,
        #[arg(long)]
        level: u8,
        #[arg(long, value_parser = parse_vertex)]
        v: Vertex,
        #[arg(long, value_parser = parse_vertex)]
        u: Vertex,
        #[arg(long, default_value = "plain")]
        variant: Variant,
        #[arg(long)]
        reversed: bool,
        /// Also check the snake conditions factor by factor.
        #[arg(long)]
        verify: bool,
    },
    /// Derive the level-1 snake statement from the localized Markov conditions.
    Derive {
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub log_base: LogBase,
    pub max_dim: usize,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            log_base: LogBase::Two,
            max_dim: MAX_DENSE_DIM,
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn from_args(args: &GlobalArgs) -> CliResult<Self> {
        let tolerances = Tolerances {
            cmi: args.tol_cmi,
            consistency: args.tol_consistency,
            reconstruction: args.tol_reconstruction,
        };
        for (name, t) in [
            ("--tol-cmi", tolerances.cmi),
            ("--tol-consistency", tolerances.consistency),
            ("--tol-reconstruction", tolerances.reconstruction),
        ] {
            if !(t > 0.0) {
                return Err(CliError::Input(format!("{name} must be positive, got {t}")));
            }
        }
        if args.max_dim < MIN_GUARD {
            return Err(CliError::Input(format!("--max-dim must be at least {MIN_GUARD}")));
        }
        Ok(Self {
            tolerances,
            log_base: args.log_base,
            max_dim: args.max_dim,
            seed: args.seed,
        })
    }

    fn guard(&self, local_dim: usize, sites: usize, what: &str) -> CliResult<()> {
        let dim = (local_dim as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
        let limit = self.max_dim.min(MAX_DENSE_DIM);
        if dim > limit as u128 {
            return Err(CliError::Guard(format!(
                "{what} needs dimension {local_dim}^{sites} = {dim}, above the limit {limit}"
            )));
        }
        Ok(())
    }
}

/// Result of one command: exit code, JSON report and human-readable text.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: u8,
    pub json: Value,
    pub text: String,
}

pub fn load(path: &Path) -> CliResult<MarginalSet> {
    let file = MarginalFile::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    file.into_set().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    if let Some(n) = cli.global.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    let cfg = RunConfig::from_args(&cli.global)?;
    match &cli.command {
        Command::Check { file, all_pairs } => cmd_check(file, &cfg, *all_pairs),
        Command::Reconstruct {
            file,
            force,
            formula_only,
            step_cmi,
            output_state,
        } => cmd_reconstruct(
            file,
            &cfg,
            &ReconstructArgs {
                force: *force,
                formula_only: *formula_only,
                step_cmi: *step_cmi,
                output_state: output_state.clone(),
            },
        ),
        Command::Entropy { file } => cmd_entropy(file, &cfg),
        Command::Generate {
            kind,
            width,
            height,
            local_dim,
            site_state,
            no_rotate,
            depolarize_at,
            depolarize_p,
            output,
            global_state,
        } => cmd_generate(
            &GenerateArgs {
                kind: *kind,
                width: *width,
                height: *height,
                local_dim: *local_dim,
                site_state: *site_state,
                rotate: !no_rotate,
                depolarize: depolarize_at.map(|v| (v, *depolarize_p)),
                output: output.clone(),
                global_state: global_state.clone(),
            },
            &cfg,
        ),
        Command::Snake {
            file,
            level,
            v,
            u,
            variant,
            reversed,
            verify,
        } => {
            let mut spec = SnakeSpec::with_variant(*level, *v, *u, *variant)?;
            if *reversed {
                spec = spec.reversed()?;
            }
            cmd_snake(file, &cfg, &spec, *verify)
        }
        Command::Derive { depth } => cmd_derive(*depth),
    }
}

fn fmt_max(report: &CheckReport, kind: CheckKind) -> String {
    report
        .max_residual(Some(kind))
        .map_or_else(|| "n/a".to_string(), |r| format!("{r:.3e}"))
}

fn failure_lines(report: &CheckReport, out: &mut String) {
    for f in report.failures() {
        let regions: Vec<String> = f.regions.iter().map(|r| r.to_string()).collect();
        out.push_str(&format!(
            "  FAIL {} residual {:.3e} > {:.1e} on {}\n",
            f.id,
            f.residual,
            f.tolerance,
            regions.join(" | ")
        ));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub file: String,
    pub window: Window,
    pub passed: bool,
    /// Bits.
    pub max_cmi: Option<f64>,
    pub max_consistency: Option<f64>,
    pub tolerances: Tolerances,
    pub markov: CheckReport,
    pub consistency: CheckReport,
}

pub fn check_set(ms: &MarginalSet, file: &Path, cfg: &RunConfig, all_pairs: bool) -> CheckOutput {
    let consistency = check_local_consistency(ms, cfg.tolerances.consistency, all_pairs);
    let markov = check_markov_conditions(ms, cfg.tolerances.cmi);
    CheckOutput {
        schema_version: SCHEMA_VERSION,
        command: "check",
        file: file.display().to_string(),
        window: ms.window(),
        passed: markov.passed() && consistency.passed(),
        max_cmi: markov.max_residual(Some(CheckKind::Markov)),
        max_consistency: consistency.max_residual(Some(CheckKind::Consistency)),
        tolerances: cfg.tolerances,
        markov,
        consistency,
    }
}

pub fn cmd_check(file: &Path, cfg: &RunConfig, all_pairs: bool) -> CliResult<Outcome> {
    let ms = load(file)?;
    let out = check_set(&ms, file, cfg, all_pairs);
    let mut text = format!(
        "{}: {}x{} window, {} clusters\nmarkov: {} conditions, max CMI {} bits (tol {:.1e})\nconsistency: {} pairs, max trace distance {} (tol {:.1e})\n",
        out.file,
        out.window.width,
        out.window.height,
        ms.marginals().len(),
        out.markov.len(),
        fmt_max(&out.markov, CheckKind::Markov),
        cfg.tolerances.cmi,
        out.consistency.len(),
        fmt_max(&out.consistency, CheckKind::Consistency),
        cfg.tolerances.consistency,
    );
    failure_lines(&out.consistency, &mut text);
    failure_lines(&out.markov, &mut text);
    text.push_str(if out.passed { "result: PASS" } else { "result: FAIL" });
    Ok(Outcome {
        code: if out.passed { exit::PASS } else { exit::FAIL },
        json: serde_json::to_value(&out).expect("serializable"),
        text,
    })
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructArgs {
    pub force: bool,
    pub formula_only: bool,
    pub step_cmi: bool,
    pub output_state: Option<PathBuf>,
}

/// Dense state written by `reconstruct --output-state` and `generate --global-state`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlobalStateFile {
    pub format_version: u32,
    pub window: Window,
    pub local_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub matrix: MatrixData,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn cmd_reconstruct(file: &Path, cfg: &RunConfig, args: &ReconstructArgs) -> CliResult<Outcome> {
    let ms = load(file)?;
    let w = ms.window();
    let base = cfg.log_base;
    let formula = base.from_bits(snakeweaver::max_entropy_formula(&ms)?);
    let med = base.from_bits(row_path_med(&ms)?);
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "reconstruct",
        "file": file.display().to_string(),
        "log_base": base,
        "formula": formula,
        "med": med,
    });
    let mut text = format!(
        "formula: {formula:.9} {unit}\nrow-path MED: {med:.9} {unit}\n",
        unit = base.unit()
    );
    if args.formula_only {
        report["passed"] = json!(true);
        return Ok(Outcome {
            code: exit::PASS,
            json: report,
            text: text.trim_end().to_string(),
        });
    }
    cfg.guard(ms.local_dim(), w.num_sites(), "reconstruction")
        .map_err(|e| CliError::Guard(format!("{e}; rerun with --formula-only for the entropy alone")))?;

    let checks = check_set(&ms, file, cfg, false);
    if !checks.passed {
        if !args.force {
            report["passed"] = json!(false);
            report["checks"] = serde_json::to_value(&checks).expect("serializable");
            text.push_str("input checks failed; rerun with --force to reconstruct anyway\n");
            failure_lines(&checks.consistency, &mut text);
            failure_lines(&checks.markov, &mut text);
            return Ok(Outcome {
                code: exit::FAIL,
                json: report,
                text: text.trim_end().to_string(),
            });
        }
        log::warn!("input checks failed; reconstructing because of --force");
    }

    let result = reconstruct_global_with(
        &ms,
        ReconstructOptions {
            tol: cfg.tolerances.reconstruction,
            step_cmi: args.step_cmi,
        },
    )?;
    let entropy = base.from_bits(result.entropy);
    let max_fidelity = result.fidelity.max_residual(Some(CheckKind::Fidelity));
    let passed = result.fidelity.passed();
    text.push_str(&format!(
        "reconstruction entropy: {entropy:.9} {}\nmarginal fidelity: max trace distance {} (tol {:.1e})\n",
        base.unit(),
        fmt_max(&result.fidelity, CheckKind::Fidelity),
        cfg.tolerances.reconstruction
    ));
    for step in &result.steps {
        text.push_str(&format!(
            "  merge at row {}: trace deviation {:.2e}, dropped weight {:.2e}{}\n",
            step.row,
            step.trace_deviation,
            step.dropped_weight,
            step.cmi.map_or(String::new(), |c| format!(", CMI {c:.2e}"))
        ));
    }
    failure_lines(&result.fidelity, &mut text);
    if let Some(path) = &args.output_state {
        write_json(
            path,
            &GlobalStateFile {
                format_version: FORMAT_VERSION,
                window: w,
                local_dim: ms.local_dim(),
                seed: None,
                generator: Some("reconstruct".into()),
                matrix: MatrixData(result.state.matrix().clone()),
            },
        )?;
        text.push_str(&format!("state written to {}\n", path.display()));
    }
    text.push_str(if passed { "result: PASS" } else { "result: FAIL" });
    report["passed"] = json!(passed);
    report["entropy"] = json!(entropy);
    report["max_fidelity_residual"] = json!(max_fidelity);
    report["reconstruction"] = serde_json::to_value(&result).expect("serializable");
    Ok(Outcome {
        code: if passed { exit::PASS } else { exit::FAIL },
        json: report,
        text,
    })
}

pub fn cmd_entropy(file: &Path, cfg: &RunConfig) -> CliResult<Outcome> {
    let ms = load(file)?;
    let base = cfg.log_base;
    let terms = formula_terms(&ms)?;
    let formula = base.from_bits(terms.iter().map(|t| t.value).sum());
    let med = base.from_bits(row_path_med(&ms)?);
    let mut text = format!("{:>10} {:>12} {:>12} {:>12} {:>12} {:>12}\n", "v", "S(2x2)", "S(2x1)", "S(1x2)", "S(1x1)", "term");
    let rows: Vec<Value> = terms
        .iter()
        .map(|t| {
            let [s22, s21, s12, s11, value] = [t.s22, t.s21, t.s12, t.s11, t.value].map(|s| base.from_bits(s));
            text.push_str(&format!(
                "{:>10} {s22:>12.6} {s21:>12.6} {s12:>12.6} {s11:>12.6} {value:>12.6}\n",
                t.v.to_string()
            ));
            json!({ "v": t.v, "s22": s22, "s21": s21, "s12": s12, "s11": s11, "value": value })
        })
        .collect();
    text.push_str(&format!(
        "formula: {formula:.9} {unit}\nrow-path MED: {med:.9} {unit}",
        unit = base.unit()
    ));
    Ok(Outcome {
        code: exit::PASS,
        json: json!({
            "schema_version": SCHEMA_VERSION,
            "command": "entropy",
            "file": file.display().to_string(),
            "log_base": base,
            "formula": formula,
            "med": med,
            "terms": rows,
        }),
        text,
    })
}

#[derive(Clone, Debug)]
pub struct GenerateArgs {
    pub kind: GeneratorKind,
    pub width: usize,
    pub height: usize,
    pub local_dim: usize,
    pub site_state: SiteState,
    pub rotate: bool,
    pub depolarize: Option<(Vertex, f64)>,
    pub output: Option<PathBuf>,
    pub global_state: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn new(kind: GeneratorKind, width: usize, height: usize) -> Self {
        Self {
            kind,
            width,
            height,
            local_dim: 2,
            site_state: SiteState::Random,
            rotate: true,
            depolarize: None,
            output: None,
            global_state: None,
        }
    }
}

/// The marginal file (and optionally the dense global state) of a generator.
pub fn generate(args: &GenerateArgs, cfg: &RunConfig) -> CliResult<(MarginalFile, Option<GlobalStateFile>)> {
    let window = Window::new(args.width, args.height)?;
    if window.cluster_anchors().is_empty() {
        return Err(CliError::Input("the window must be at least 3x3".into()));
    }
    let seed = cfg.seed.unwrap_or(0);
    let d = args.local_dim;
    let qubits_only = matches!(args.kind, GeneratorKind::Repetition | GeneratorKind::GhzRow)
        || (args.kind == GeneratorKind::Product && args.site_state == SiteState::Random);
    if qubits_only && d != 2 {
        return Err(CliError::Input(format!("{:?} states need --local-dim 2", args.kind)));
    }
    type GlobalFn = Box<dyn Fn() -> snakeweaver::Result<snakeweaver::DensityOperator>>;
    let (mut ms, global): (MarginalSet, GlobalFn) = match args.kind {
        GeneratorKind::Product => {
            let mut r = rng(seed);
            let specs: std::collections::BTreeMap<Vertex, SiteSpec> = window
                .region()
                .iter()
                .map(|v| {
                    let spec = match args.site_state {
                        SiteState::Zero => SiteSpec::Zero,
                        SiteState::Mixed => SiteSpec::MaximallyMixed,
                        SiteState::Random => {
                            let len: f64 = r.gen_range(0.0..1.0);
                            let z: f64 = r.gen_range(-1.0..1.0);
                            let phi: f64 = r.gen_range(0.0..std::f64::consts::TAU);
                            let rho = (1.0 - z * z).sqrt();
                            SiteSpec::Bloch([len * rho * phi.cos(), len * rho * phi.sin(), len * z])
                        }
                    };
                    (v, spec)
                })
                .collect();
            let st = gen_product(window, d, |v| specs[&v].clone())?;
            (st.marginal_set()?, Box::new(move || st.global()))
        }
        GeneratorKind::RowMarkov | GeneratorKind::ColumnMarkov => {
            let orientation = if args.kind == GeneratorKind::RowMarkov {
                Orientation::Rows
            } else {
                Orientation::Columns
            };
            let st = LineMarkovState::random(window, d, orientation, seed, args.rotate);
            (st.marginal_set()?, Box::new(move || st.global()))
        }
        GeneratorKind::Repetition => {
            let st = LineMarkovState::repetition(window, Orientation::Rows);
            (st.marginal_set()?, Box::new(move || st.global()))
        }
        GeneratorKind::GhzRow => {
            let st = gen_ghz_row(window, 0, 0)?;
            (st.marginal_set()?, Box::new(move || st.global()))
        }
    };
    if let Some((anchor, p)) = args.depolarize {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Input(format!("--depolarize-p {p} outside [0,1]")));
        }
        let op = ms
            .marginal(anchor)
            .ok_or_else(|| CliError::Input(format!("no cluster anchored at {anchor}")))?
            .depolarized(p)?;
        ms.replace_marginal(anchor, op)?;
    }
    let name = serde_json::to_value(args.kind).expect("serializable");
    let generator = name.as_str().map(str::to_string);
    let file = MarginalFile::from_set(&ms, cfg.log_base, Some(seed), generator.clone());
    let global_file = match &args.global_state {
        Some(_) => {
            cfg.guard(d, window.num_sites(), "the global state")?;
            Some(GlobalStateFile {
                format_version: FORMAT_VERSION,
                window,
                local_dim: d,
                seed: Some(seed),
                generator,
                matrix: MatrixData(global()?.into_matrix()),
            })
        }
        None => None,
    };
    Ok((file, global_file))
}

pub fn cmd_generate(args: &GenerateArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    let (file, global) = generate(args, cfg)?;
    let mut text = String::new();
    if let (Some(path), Some(g)) = (&args.global_state, &global) {
        write_json(path, g)?;
        text.push_str(&format!("global state written to {}\n", path.display()));
    }
    match &args.output {
        Some(path) => {
            file.write(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            text.push_str(&format!(
                "{} marginals of a {}x{} window written to {}",
                file.marginals.len(),
                file.window.width,
                file.window.height,
                path.display()
            ));
            Ok(Outcome {
                code: exit::PASS,
                json: json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": "generate",
                    "output": path.display().to_string(),
                    "generator": file.generator,
                    "seed": file.seed,
                    "clusters": file.marginals.len(),
                }),
                text: text.trim_end().to_string(),
            })
        }
        None => {
            let body = file.to_json()?;
            let value: Value = serde_json::from_str(&body).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(Outcome {
                code: exit::PASS,
                json: value,
                text: body,
            })
        }
    }
}

pub fn cmd_snake(file: &Path, cfg: &RunConfig, spec: &SnakeSpec, verify: bool) -> CliResult<Outcome> {
    let ms = load(file)?;
    cfg.guard(ms.local_dim(), spec.support().len(), "the snake")?;
    let base = cfg.log_base;
    let state = build_snake(&ms, spec)?;
    let entropy = base.from_bits(state.entropy());
    let med = base.from_bits(snake_entropy_med(&ms, spec)?);
    let mut text = format!(
        "level-{} {:?} snake {}..{} on {} sites\nentropy: {entropy:.9} {unit}\ncolumn MED: {med:.9} {unit}\n",
        spec.level,
        spec.variant,
        spec.v,
        spec.u,
        state.region().len(),
        unit = base.unit()
    );
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "snake",
        "spec": spec,
        "log_base": base,
        "entropy": entropy,
        "med": med,
        "passed": true,
    });
    let mut code = exit::PASS;
    if verify {
        let checks = verify_is_snake(&ms, spec, cfg.tolerances.cmi)?;
        text.push_str(&format!(
            "snake conditions: {} records, max CMI {}, max overlap distance {}\n",
            checks.len(),
            fmt_max(&checks, CheckKind::Markov),
            fmt_max(&checks, CheckKind::Consistency)
        ));
        failure_lines(&checks, &mut text);
        if !checks.passed() {
            code = exit::FAIL;
        }
        report["passed"] = json!(checks.passed());
        report["verify"] = serde_json::to_value(&checks).expect("serializable");
    }
    text.push_str(if code == exit::PASS { "result: PASS" } else { "result: FAIL" });
    Ok(Outcome { code, json: report, text })
}

pub fn cmd_derive(depth: usize) -> CliResult<Outcome> {
    let anchor = Vertex::new(2, 0);
    let target = level1_snake_target(anchor);
    let axioms = localized_axioms(anchor);
    let found = derive(&axioms, &target, depth)?;
    let mut text = format!("target {target} from {} localized axioms\n", axioms.len());
    match &found {
        Some(d) => {
            for step in &d.steps {
                let inputs: Vec<String> = step.inputs.iter().map(|s| s.to_string()).collect();
                text.push_str(&format!("  {:?}: {} => {}\n", step.mv, inputs.join(" + "), step.output));
            }
            text.push_str(&format!("derived in {} moves", d.len()));
        }
        None => text.push_str(&format!("not derivable within depth {depth}")),
    }
    Ok(Outcome {
        code: if found.is_some() { exit::PASS } else { exit::FAIL },
        json: json!({
            "schema_version": SCHEMA_VERSION,
            "command": "derive",
            "target": target,
            "passed": found.is_some(),
            "trace": found,
        }),
        text,
    })
}
