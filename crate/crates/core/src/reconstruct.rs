//! Global reconstruction from fundamental marginals and the closed-form maximum entropy.

use std::ops::{Add, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{cluster_region, BlockPath, Region, Vertex};
use crate::marginals::{MarginalSet, Window};
use crate::merge::right_merge_detailed;
use crate::operator::{dense_dim, jensen_gap_nats, med, DensityOperator, EntropyProvider};
use crate::report::{CheckKind, CheckRecord, CheckReport};
use crate::snakes::{build_snake, marginal_fidelity, SnakeSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReconstructOptions {
    /// Tolerance of the marginal-fidelity records.
    pub tol: f64,
    /// Record `I(rows below k : row k+1 | row k)` after each vertical merge.
    pub step_cmi: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionStep {
    /// Row of the overlap between the state so far and the new level-2 snake.
    pub row: i64,
    pub trace_deviation: f64,
    pub dropped_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cmi: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    #[serde(skip)]
    pub state: DensityOperator,
    pub steps: Vec<ReconstructionStep>,
    pub fidelity: CheckReport,
    /// Bits.
    pub entropy: f64,
}

fn row(window: Window, y: i64) -> Region {
    (0..window.width as i64).map(|x| Vertex::new(x, y)).collect()
}

/// Level-2 snake on rows 0–1, then `⊲` the level-2 snakes on rows `k, k+1` for `k = 1..H−2`.
pub fn reconstruct_global(ms: &MarginalSet) -> Result<ReconstructionResult> {
    reconstruct_global_with(
        ms,
        ReconstructOptions {
            tol: 1e-6,
            step_cmi: false,
        },
    )
}

pub fn reconstruct_global_with(ms: &MarginalSet, opts: ReconstructOptions) -> Result<ReconstructionResult> {
    let w = ms.window();
    if w.width < 3 || w.height < 2 {
        return Err(Error::Geometry(format!(
            "reconstruction needs a window at least 3x2, got {}x{}",
            w.width, w.height
        )));
    }
    dense_dim(ms.local_dim(), w.num_sites())?;
    let right = w.width as i64 - 1;
    let strip = |y: i64| SnakeSpec::new(2, Vertex::new(0, y), Vertex::new(right, y));
    let mut state = build_snake(ms, &strip(0)?)?;
    let mut steps = Vec::new();
    for k in 1..w.height as i64 - 1 {
        let snake = build_snake(ms, &strip(k)?)?;
        let outcome = right_merge_detailed(&state, &snake)?;
        state = outcome.state;
        let cmi = if opts.step_cmi {
            let below: Region = (0..k).flat_map(|y| row(w, y).sites().to_vec()).collect();
            Some(state.cmi(&below, &row(w, k), &row(w, k + 1))?)
        } else {
            None
        };
        steps.push(ReconstructionStep {
            row: k,
            trace_deviation: outcome.trace_deviation,
            dropped_weight: outcome.dropped_weight,
            cmi,
        });
    }
    let fidelity = marginal_fidelity(ms, &state, opts.tol)?;
    let entropy = state.entropy();
    Ok(ReconstructionResult {
        state,
        steps,
        fidelity,
        entropy,
    })
}

/// `I(row k : row k+2 | row k+1)` on the level-3 snake spanning each three-row slab.
pub fn vertical_markov_check(ms: &MarginalSet, tol: f64) -> Result<CheckReport> {
    let w = ms.window();
    if w.height < 3 {
        return Err(Error::Geometry("vertical checks need at least three rows".into()));
    }
    let right = w.width as i64 - 1;
    let mut report = CheckReport::new();
    for k in 0..w.height as i64 - 2 {
        let snake = build_snake(ms, &SnakeSpec::new(3, Vertex::new(0, k), Vertex::new(right, k))?)?;
        let (a, b, c) = (row(w, k), row(w, k + 1), row(w, k + 2));
        let cmi = snake.cmi(&a, &b, &c)?;
        report.push(CheckRecord::at_most(
            format!("vertical{k}"),
            CheckKind::Markov,
            vec![a, b, c],
            cmi,
            tol,
        ));
    }
    Ok(report)
}

/// One summand of the maximum-entropy formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormulaTerm<T> {
    pub v: Vertex,
    pub s22: T,
    pub s21: T,
    pub s12: T,
    pub s11: T,
    pub value: T,
}

/// The clusters `2×2@v, 2×1@v, 1×2@v, 1×1@v` clipped to the window, for every `v` whose
/// clipped `2×2` cluster is nonempty.
pub fn formula_regions(window: Window) -> Vec<(Vertex, [Region; 4])> {
    let mut out = Vec::new();
    for y in -1..window.height as i64 {
        for x in 0..=window.width as i64 {
            let v = Vertex::new(x, y);
            let clip = |n, m| window.clip(&cluster_region(v, n, m).expect("positive size"));
            out.push((v, [clip(2, 2), clip(2, 1), clip(1, 2), clip(1, 1)]));
        }
    }
    out
}

/// `Σ_v [S(2×2@v) − S(2×1@v) − S(1×2@v) + S(1×1@v)]` with any entropy function; clusters are
/// clipped to the window and empty regions contribute zero.
pub fn formula_terms_with<T, F>(window: Window, mut entropy: F) -> Result<Vec<FormulaTerm<T>>>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
    F: FnMut(&Region) -> Result<T>,
{
    let mut out = Vec::new();
    for (v, regions) in formula_regions(window) {
        let mut s = [T::default(); 4];
        for (slot, r) in s.iter_mut().zip(&regions) {
            if !r.is_empty() {
                *slot = entropy(r)?;
            }
        }
        out.push(FormulaTerm {
            v,
            s22: s[0],
            s21: s[1],
            s12: s[2],
            s11: s[3],
            value: s[0] - s[1] - s[2] + s[3],
        });
    }
    Ok(out)
}

pub fn max_entropy_formula_with<T, F>(window: Window, entropy: F) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
    F: FnMut(&Region) -> Result<T>,
{
    Ok(formula_terms_with(window, entropy)?
        .into_iter()
        .fold(T::default(), |acc, t| acc + t.value))
}

/// Maximum entropy (bits) consistent with the marginals, from derived-marginal entropies only.
pub fn max_entropy_formula(ms: &MarginalSet) -> Result<f64> {
    max_entropy_formula_with(ms.window(), |r| ms.entropy_of(r))
}

pub fn formula_terms(ms: &MarginalSet) -> Result<Vec<FormulaTerm<f64>>> {
    formula_terms_with(ms.window(), |r| ms.entropy_of(r))
}

/// MED over the row-by-row site path (each site conditioned on its west and south neighbours).
pub fn row_path_med(ms: &MarginalSet) -> Result<f64> {
    med(ms, &BlockPath::row_major(&ms.window().region())?)
}

/// Hypotheses of max-entropy uniqueness (equal path marginals, `S(ρ) = S(σ) = MED`), then
/// `‖ρ−σ‖₁ ≤ √(8·gap) + tol` with the Jensen gap in nats. The bound is only asserted when every
/// hypothesis holds.
pub fn uniqueness_certificate(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    path: &BlockPath,
    tol: f64,
) -> Result<CheckReport> {
    if rho.region() != sigma.region() || rho.local_dim() != sigma.local_dim() {
        return Err(Error::Precondition(format!(
            "states live on different regions: {} vs {}",
            rho.region(),
            sigma.region()
        )));
    }
    if &path.support() != rho.region() {
        return Err(Error::Precondition("path must cover the states' region".into()));
    }
    let mut report = CheckReport::new();
    for (k, (block, cond)) in path.conditioning_pairs().into_iter().enumerate() {
        let r = block.union(&cond);
        let gap = rho.partial_trace(&r)?.trace_distance(&sigma.partial_trace(&r)?)?;
        report.push(CheckRecord::at_most(
            format!("unique:marginal{k}"),
            CheckKind::Hypothesis,
            vec![r],
            gap,
            tol,
        ));
    }
    let m = med(rho, path)?;
    let (s_rho, s_sigma) = (rho.entropy(), sigma.entropy());
    for (name, s) in [("rho", s_rho), ("sigma", s_sigma)] {
        report.push(
            CheckRecord::at_most(
                format!("unique:entropy_{name}"),
                CheckKind::Hypothesis,
                vec![rho.region().clone()],
                (s - m).abs(),
                tol,
            )
            .with_note(format!("S={s:.12} MED={m:.12}")),
        );
    }
    if report.passed() {
        let gap = jensen_gap_nats(rho, sigma)?.max(0.0);
        let l1 = 2.0 * rho.trace_distance(sigma)?;
        let bound = (8.0 * gap).sqrt();
        report.push(
            CheckRecord::at_most(
                "unique:distance",
                CheckKind::Bound,
                vec![rho.region().clone()],
                l1 - bound,
                tol,
            )
            .with_note(format!("l1={l1:.3e} sqrt(8 gap)={bound:.3e} gap_nats={gap:.3e}")),
        );
    }
    Ok(report)
}
