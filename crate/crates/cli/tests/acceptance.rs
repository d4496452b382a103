//! End-to-end acceptance criteria. Runs as a plain binary and prints one line per criterion.

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use tempfile::TempDir;

use snakeweaver::ci::{closure, cluster_axioms, derive, level1_snake_target, localized_axioms, DEFAULT_DEPTH};
use snakeweaver::merge::{is_markov_via_recovery, merging_lemma_combine, PreconditionPolicy};
use snakeweaver::operator::jensen_gap_nats;
use snakeweaver::oracles::random::{random_density, rng};
use snakeweaver::oracles::{
    brute_force_maxent, gen_markov_pair, gen_product, gen_qmc_triple, LineMarkovState, MaxEntOptions,
    Orientation, SiteSpec, StabilizerState,
};
use snakeweaver::reconstruct::max_entropy_formula_with;
use snakeweaver::snakes::{level_drop_check, variant_agreement};
use snakeweaver::{
    max_entropy_formula, med, reconstruct_global, uniqueness_certificate, BlockPath, CIStatement, CheckReport,
    DensityOperator, EntropyProvider, MarginalSet, Region, Vertex, Window,
};
use snakeweaver_cli::{cmd_check, generate, GenerateArgs, GeneratorKind, RunConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn failures(report: &CheckReport) -> String {
    report
        .failures()
        .map(|f| format!("{} {:.3e}", f.id, f.residual))
        .collect::<Vec<_>>()
        .join(", ")
}

fn sites(cells: &[(i64, i64)]) -> Region {
    cells.iter().map(|&(x, y)| Vertex::new(x, y)).collect()
}

fn row(range: std::ops::Range<i64>) -> Region {
    range.map(|x| Vertex::new(x, 0)).collect()
}

fn write_file(dir: &TempDir, name: &str, args: &GenerateArgs, cfg: &RunConfig) -> std::path::PathBuf {
    let (file, _) = generate(args, cfg).expect("generator");
    let path = dir.path().join(name);
    file.write(&path).expect("writable temp dir");
    path
}

fn row_markov_4x3() -> (LineMarkovState, MarginalSet) {
    let st = LineMarkovState::random(Window::new(4, 3).unwrap(), 2, Orientation::Rows, 2024, true);
    let ms = st.marginal_set().unwrap();
    (st, ms)
}

fn criterion_1() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let (mut max_cmi, mut max_cons) = (0.0f64, 0.0f64);
    let mut n = 0;
    for kind in [GeneratorKind::RowMarkov, GeneratorKind::ColumnMarkov] {
        for seed in 0..20u64 {
            let cfg = RunConfig {
                seed: Some(seed),
                ..RunConfig::default()
            };
            let path = write_file(&dir, &format!("{kind:?}-{seed}.json"), &GenerateArgs::new(kind, 4, 4), &cfg);
            let out = cmd_check(&path, &cfg, false).map_err(|e| e.to_string())?;
            ensure(out.code == 0, || format!("{kind:?} seed {seed} failed: {}", out.text))?;
            max_cmi = max_cmi.max(out.json["max_cmi"].as_f64().unwrap());
            max_cons = max_cons.max(out.json["max_consistency"].as_f64().unwrap());
            n += 1;
        }
    }
    ensure(max_cmi <= 1e-9, || format!("max CMI {max_cmi:.3e} > 1e-9"))?;
    ensure(max_cons <= 1e-10, || format!("max consistency {max_cons:.3e} > 1e-10"))?;
    Ok(format!("{n} files pass, max CMI {max_cmi:.2e} bits, max consistency {max_cons:.2e}"))
}

fn criterion_2() -> Outcome {
    let block_sets: [&[(usize, usize)]; 4] = [&[(2, 2)], &[(1, 2), (2, 1)], &[(1, 1), (1, 1), (1, 2)], &[(2, 1), (1, 1)]];
    let mut worst_markov = 0.0f64;
    for seed in 0..100u64 {
        let blocks = block_sets[seed as usize % block_sets.len()];
        let t = gen_qmc_triple(2, (1, 2, 1), blocks, seed).map_err(|e| e.to_string())?;
        let check = is_markov_via_recovery(&t.state, &t.a, &t.b, &t.c, 1e-8).map_err(|e| e.to_string())?;
        worst_markov = worst_markov.max(check.residual);
    }
    ensure(worst_markov <= 1e-8, || format!("QMC recovery residual {worst_markov:.3e} > 1e-8"))?;

    let (a, b, c) = (row(0..1), row(1..3), row(3..4));
    let all = a.union(&b).union(&c);
    let mut r = rng(77);
    let (mut accepted, mut drawn, mut best_generic) = (0, 0, f64::INFINITY);
    while accepted < 100 {
        drawn += 1;
        ensure(drawn <= 10_000, || format!("only {accepted} generic states with CMI >= 0.01"))?;
        let rank = r.gen_range(1..=16);
        let rho = random_density(all.clone(), 2, Some(rank), &mut r).map_err(|e| e.to_string())?;
        if rho.cmi(&a, &b, &c).map_err(|e| e.to_string())? < 0.01 {
            continue;
        }
        let check = is_markov_via_recovery(&rho, &a, &b, &c, 1e-8).map_err(|e| e.to_string())?;
        best_generic = best_generic.min(check.residual);
        accepted += 1;
    }
    ensure(best_generic >= 1e-3, || format!("generic recovery residual {best_generic:.3e} < 1e-3"))?;
    Ok(format!(
        "QMC residual <= {worst_markov:.2e}; generic residual >= {best_generic:.2e} ({drawn} drawn)"
    ))
}

fn criterion_3() -> Outcome {
    let (mut worst_marg, mut worst_cmi) = (0.0f64, 0.0f64);
    for seed in 0..50u64 {
        let p = gen_markov_pair(seed).map_err(|e| e.to_string())?;
        let out = merging_lemma_combine(&p.rho, &p.sigma, &p.b, &p.c, 1e-8, PreconditionPolicy::Strict)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let tau = &out.state;
        let abc = p.a.union(&p.b).union(&p.c);
        let bcd = p.b.union(&p.c).union(&p.d);
        let m1 = tau.partial_trace(&abc).unwrap().trace_distance(&p.rho).unwrap();
        let m2 = tau.partial_trace(&bcd).unwrap().trace_distance(&p.sigma).unwrap();
        let c1 = tau.cmi(&p.a, &p.b, &p.c.union(&p.d)).unwrap();
        let c2 = tau.cmi(&p.a.union(&p.b), &p.c, &p.d).unwrap();
        worst_marg = worst_marg.max(m1).max(m2);
        worst_cmi = worst_cmi.max(c1).max(c2);
    }
    ensure(worst_marg <= 1e-8, || format!("marginal mismatch {worst_marg:.3e} > 1e-8"))?;
    ensure(worst_cmi <= 1e-7, || format!("output CMI {worst_cmi:.3e} > 1e-7"))?;
    Ok(format!("50 pairs, marginals within {worst_marg:.2e}, output CMI <= {worst_cmi:.2e}"))
}

fn criterion_4() -> Outcome {
    let (_, ms) = row_markov_4x3();
    let mut report = CheckReport::new();
    for level in [2u8, 3] {
        report.extend(variant_agreement(&ms, level, Vertex::new(0, 0), Vertex::new(3, 0), 1e-7).map_err(|e| e.to_string())?);
    }
    for y in 0..3 {
        report.extend(level_drop_check(&ms, Vertex::new(0, y), Vertex::new(3, y), 1e-7).map_err(|e| e.to_string())?);
    }
    ensure(report.passed(), || failures(&report))?;
    Ok(format!(
        "{} comparisons, max trace distance {:.2e}",
        report.len(),
        report.max_residual(None).unwrap_or(0.0)
    ))
}

fn criteria_5_and_6() -> (Outcome, Outcome) {
    let (st, ms) = row_markov_4x3();
    let result = match reconstruct_global(&ms) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(format!("no reconstruction: {e}"))),
    };
    let c5 = (|| -> Outcome {
        ensure(result.fidelity.passed(), || failures(&result.fidelity))?;
        let global = st.global().map_err(|e| e.to_string())?;
        let dist = result.state.trace_distance(&global).map_err(|e| e.to_string())?;
        ensure(dist <= 1e-6, || format!("trace distance to the oracle {dist:.3e} > 1e-6"))?;
        let path = BlockPath::row_major(&ms.window().region()).map_err(|e| e.to_string())?;
        let cert = uniqueness_certificate(&result.state, &global, &path, 1e-6).map_err(|e| e.to_string())?;
        ensure(cert.passed(), || format!("certificate: {}", failures(&cert)))?;
        Ok(format!(
            "fidelity {:.2e}, oracle distance {dist:.2e}, certificate {} records",
            result.fidelity.max_residual(None).unwrap_or(0.0),
            cert.len()
        ))
    })();
    let c6 = (|| -> Outcome {
        let f = max_entropy_formula(&ms).map_err(|e| e.to_string())?;
        let gap = (result.entropy - f).abs();
        ensure(gap <= 1e-6, || format!("S(reconstruction) {} vs formula {f}", result.entropy))?;

        let chain = LineMarkovState::random(Window::new(4, 1).unwrap(), 2, Orientation::Rows, 31, true);
        let g = chain.global().map_err(|e| e.to_string())?;
        let pairs: Vec<DensityOperator> = (0..3)
            .map(|x| chain.marginal(&row(x..x + 2)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let chain_formula =
            max_entropy_formula_with(Window::new(4, 1).unwrap(), |r| g.entropy_of(r)).map_err(|e| e.to_string())?;
        let chain_opt = brute_force_maxent(&pairs, &row(0..4), MaxEntOptions::default()).map_err(|e| e.to_string())?;
        let chain_gap = (chain_formula - chain_opt.value).abs();
        ensure(chain_gap <= 1e-4, || format!("chain: formula {chain_formula} vs maxent {}", chain_opt.value))?;

        let w23 = Window::new(2, 3).unwrap();
        let grid = LineMarkovState::random(w23, 2, Orientation::Columns, 32, true);
        let g23 = grid.global().map_err(|e| e.to_string())?;
        let plaquettes: Vec<DensityOperator> = (0..2)
            .map(|y| grid.marginal(&sites(&[(0, y), (1, y), (0, y + 1), (1, y + 1)])))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let grid_formula = max_entropy_formula_with(w23, |r| g23.entropy_of(r)).map_err(|e| e.to_string())?;
        let grid_opt = brute_force_maxent(&plaquettes, &w23.region(), MaxEntOptions::default()).map_err(|e| e.to_string())?;
        let grid_gap = (grid_formula - grid_opt.value).abs();
        ensure(grid_gap <= 1e-3, || format!("2x3: formula {grid_formula} vs maxent {}", grid_opt.value))?;

        let w88 = Window::new(8, 8).unwrap();
        let stab = StabilizerState::repetition_rows(w88);
        let exact = stab.entropy(&w88.region()).map_err(|e| e.to_string())?;
        let formula = max_entropy_formula_with(w88, |r| stab.entropy(r)).map_err(|e| e.to_string())?;
        ensure(exact == 8 && formula == 8, || format!("stabilizer: formula {formula}, exact {exact}"))?;
        Ok(format!(
            "formula gap {gap:.2e}; chain maxent gap {chain_gap:.2e}; 2x3 maxent gap {grid_gap:.2e}; 8x8 stabilizer {formula} = {exact} bits"
        ))
    })();
    (c5, c6)
}

struct Cached<'a> {
    state: &'a DensityOperator,
    cache: Mutex<HashMap<Region, f64>>,
}

impl EntropyProvider for Cached<'_> {
    fn entropy_of(&self, region: &Region) -> snakeweaver::Result<f64> {
        if let Some(&s) = self.cache.lock().unwrap().get(region) {
            return Ok(s);
        }
        let s = self.state.entropy_of(region)?;
        self.cache.lock().unwrap().insert(region.clone(), s);
        Ok(s)
    }
}

fn criterion_7() -> Outcome {
    let anchor = Vertex::new(2, 0);
    let derived: Vec<CIStatement> = closure(&cluster_axioms(anchor), DEFAULT_DEPTH).map_err(|e| e.to_string())?;
    let w = Window::new(3, 3).unwrap();
    let mut states = Vec::new();
    for seed in 0..3 {
        states.push(LineMarkovState::random(w, 2, Orientation::Rows, seed, true).global());
        states.push(LineMarkovState::random(w, 2, Orientation::Columns, seed, true).global());
    }
    states.push(LineMarkovState::repetition(w, Orientation::Rows).global());
    states.push(LineMarkovState::repetition(w, Orientation::Columns).global());
    states.push(gen_product(w, 2, |v| SiteSpec::Bloch([0.1 * v.x as f64, 0.2, 0.3 * v.y as f64])).and_then(|p| p.global()));
    states.push(StabilizerState::repetition_rows(w).to_density());
    let mut worst = 0.0f64;
    for (k, state) in states.into_iter().enumerate() {
        let state = state.map_err(|e| e.to_string())?;
        let provider = Cached {
            state: &state,
            cache: Mutex::new(HashMap::new()),
        };
        for s in &derived {
            let cmi = s.cmi(&provider).map_err(|e| e.to_string())?;
            ensure(cmi <= 1e-8, || format!("state {k}: {s} has CMI {cmi:.3e}"))?;
            worst = worst.max(cmi);
        }
    }
    let target = level1_snake_target(anchor);
    let trace = derive(&localized_axioms(anchor), &target, DEFAULT_DEPTH).map_err(|e| e.to_string())?;
    let trace = trace.ok_or_else(|| format!("{target} not derivable"))?;
    Ok(format!(
        "{} derived statements hold on 10 states (max CMI {worst:.2e}); {target} derived in {} moves",
        derived.len(),
        trace.len()
    ))
}

fn criterion_8() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let cfg = RunConfig::default();
    let ghz = write_file(&dir, "ghz.json", &GenerateArgs::new(GeneratorKind::GhzRow, 4, 3), &cfg);
    let out = cmd_check(&ghz, &cfg, false).map_err(|e| e.to_string())?;
    ensure(out.code == 1, || "GHZ row passed the check".into())?;
    let ghz_cmi = out.json["max_cmi"].as_f64().unwrap();
    ensure(ghz_cmi >= 0.5, || format!("GHZ max CMI {ghz_cmi} < 0.5"))?;

    let mut localized = 0;
    for anchor in [Vertex::new(3, 1), Vertex::new(2, 0)] {
        let mut args = GenerateArgs::new(GeneratorKind::RowMarkov, 4, 4);
        args.depolarize = Some((anchor, 1e-3));
        let path = write_file(&dir, &format!("dep{}{}.json", anchor.x, anchor.y), &args, &cfg);
        let out = cmd_check(&path, &cfg, false).map_err(|e| e.to_string())?;
        ensure(out.code == 1, || format!("depolarized {anchor} passed"))?;
        let records = out.json["consistency"]["records"].as_array().unwrap();
        let tag = anchor.to_string();
        let expected: BTreeSet<&str> = records
            .iter()
            .map(|r| r["id"].as_str().unwrap())
            .filter(|id| id.contains(&tag))
            .collect();
        let failed: BTreeSet<&str> = records
            .iter()
            .filter(|r| r["passed"] == false)
            .map(|r| r["id"].as_str().unwrap())
            .collect();
        ensure(!expected.is_empty() && failed == expected, || {
            format!("{anchor}: failing pairs {failed:?}, expected {expected:?}")
        })?;
        localized += failed.len();
    }
    Ok(format!("GHZ max CMI {ghz_cmi:.3} bits; depolarization localized to {localized} pairs"))
}

fn draw(n: usize, r: &mut impl Rng) -> DensityOperator {
    let rank = r.gen_range(1..=1usize << n);
    random_density(row(0..n as i64), 2, Some(rank), r).unwrap()
}

fn criterion_9() -> Outcome {
    const N: usize = 200;
    let mut r = rng(909);
    let tol = 1e-9;
    let (mut ssa, mut mono, mut jensen, mut meds) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for _ in 0..N {
        let n = r.gen_range(3..=5);
        let rho = draw(n, &mut r);
        let cut1 = r.gen_range(1..n - 1) as i64;
        let cut2 = r.gen_range(cut1 + 1..n as i64);
        let (a, b, c) = (row(0..cut1), row(cut1..cut2), row(cut2..n as i64));
        ssa = ssa.min(rho.cmi(&a, &b, &c).unwrap());

        let (sa, sc) = (rho.entropy_of(&a).unwrap(), rho.entropy_of(&c).unwrap());
        let (sab, sbc) = (rho.entropy_of(&a.union(&b)).unwrap(), rho.entropy_of(&b.union(&c)).unwrap());
        let sb = rho.entropy_of(&b).unwrap();
        let weak = sab + sbc - sa - sc;
        let mutual = (sa + sb - sab, sa + sbc - rho.entropy_of(&a.union(&b).union(&c)).unwrap());
        mono = mono.min(weak).min(mutual.1 - mutual.0);

        let n2 = r.gen_range(1..=4);
        let (x, y) = (draw(n2, &mut r), draw(n2, &mut r));
        let gap = jensen_gap_nats(&x, &y).unwrap();
        let l1 = 2.0 * x.trace_distance(&y).unwrap();
        jensen = jensen.min(8.0 * gap - l1 * l1).min(std::f64::consts::LN_2 - gap).min(gap);

        let h = r.gen_range(1..=2i64);
        let w = if h == 1 { r.gen_range(2..=5) } else { r.gen_range(2..=3i64) };
        let region: Region = (0..h).flat_map(|y| (0..w).map(move |x| Vertex::new(x, y))).collect();
        let rank = r.gen_range(1..=1usize << region.len());
        let sigma = random_density(region.clone(), 2, Some(rank), &mut r).unwrap();
        let m = med(&sigma, &BlockPath::row_major(&region).unwrap()).unwrap();
        meds = meds.min(m - sigma.entropy());
    }
    for (name, slack) in [("SSA", ssa), ("monotonicity", mono), ("Jensen bound", jensen), ("MED >= S", meds)] {
        ensure(slack >= -tol, || format!("{name} violated by {:.3e}", -slack))?;
    }
    Ok(format!(
        "{N} instances each; min slack SSA {ssa:.1e}, monotonicity {mono:.1e}, Jensen {jensen:.1e}, MED {meds:.1e}"
    ))
}

fn run(n: usize, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    report(n, budget, start.elapsed(), outcome)
}

fn report(n: usize, budget: Duration, elapsed: Duration, outcome: Outcome) -> bool {
    let outcome = outcome.and_then(|msg| {
        if elapsed <= budget {
            Ok(msg)
        } else {
            Err(format!("{msg}; over the {}s budget", budget.as_secs()))
        }
    });
    let (tag, msg) = match &outcome {
        Ok(m) => ("PASS", m),
        Err(m) => ("FAIL", m),
    };
    println!("[{tag}] criterion {n}: {msg} ({:.1}s)", elapsed.as_secs_f64());
    outcome.is_ok()
}

fn main() -> ExitCode {
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| filter.is_empty() || filter.contains(&n);
    let mut ok = true;
    let minutes = |m: u64| Duration::from_secs(60 * m);
    if wanted(1) {
        ok &= run(1, minutes(1), criterion_1);
    }
    if wanted(2) {
        ok &= run(2, minutes(1), criterion_2);
    }
    if wanted(3) {
        ok &= run(3, minutes(1), criterion_3);
    }
    if wanted(4) {
        ok &= run(4, minutes(10), criterion_4);
    }
    if wanted(5) || wanted(6) {
        let start = Instant::now();
        let (c5, c6) = catch_unwind(criteria_5_and_6).unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
        let elapsed = start.elapsed();
        if wanted(5) {
            ok &= report(5, minutes(5), elapsed, c5);
        }
        if wanted(6) {
            ok &= report(6, minutes(10), elapsed, c6);
        }
    }
    if wanted(7) {
        ok &= run(7, minutes(2), criterion_7);
    }
    if wanted(8) {
        ok &= run(8, minutes(1), criterion_8);
    }
    if wanted(9) {
        ok &= run(9, minutes(5), criterion_9);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
