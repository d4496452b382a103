//! Petz right-merges, merge products and recovery-based Markov checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::{self, Matrix};
use crate::operator::{dense_dim, embed_operator, psd_roots, sqrt_psd, DensityOperator};

/// Support weight below which two merge inputs count as having no common support.
const MIN_KEPT_WEIGHT: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct MergeOutcome {
    pub state: DensityOperator,
    /// `Tr − 1` before renormalization.
    pub trace_deviation: f64,
    /// Weight of `σ_B` outside the support of `ρ_B`.
    pub dropped_weight: f64,
}

/// `σ_AB ⊲ ρ_BC = ρ_BC^{1/2} ρ_B^{-1/2} σ_AB ρ_B^{-1/2} ρ_BC^{1/2}`.
pub fn right_merge(sigma: &DensityOperator, rho: &DensityOperator) -> Result<DensityOperator> {
    Ok(right_merge_detailed(sigma, rho)?.state)
}

pub fn right_merge_detailed(sigma: &DensityOperator, rho: &DensityOperator) -> Result<MergeOutcome> {
    let d = sigma.local_dim();
    if rho.local_dim() != d {
        return Err(Error::Precondition("local dimensions differ".into()));
    }
    let (r1, r2) = (sigma.region(), rho.region());
    let b = r1.intersection(r2);
    if b.is_empty() {
        return Err(Error::EmptyOverlap {
            left: r1.clone(),
            right: r2.clone(),
        });
    }
    let c = r2.difference(r1);
    let union = r1.union(r2);
    dense_dim(d, union.len())?;

    let rho_b = rho.partial_trace(&b)?;
    let sigma_b = sigma.partial_trace(&b)?;
    let roots_b = psd_roots(rho_b.matrix())?;
    let kept = overlap_trace(&roots_b.support, sigma_b.matrix());
    if kept <= MIN_KEPT_WEIGHT {
        return Err(Error::ZeroSupport(b));
    }
    let dropped_weight = (1.0 - kept).max(0.0);
    if dropped_weight > 1e-12 {
        log::debug!("right-merge on {b}: dropped weight {dropped_weight:.3e} outside support");
    }

    let k = sqrt_psd(rho.matrix())?.matmul(&embed_operator(&roots_b.pinv_sqrt, &b, r2, d)?);

    // Work in the factor order [r1, c], then restore canonical order.
    let y = if c.is_empty() {
        sigma.matrix().clone()
    } else {
        sigma.matrix().kron(&Matrix::identity(dense_dim(d, c.len())?))
    };
    let n = r1.len() + c.len();
    let order: Vec<_> = r1.iter().chain(c.iter()).collect();
    let index_of = |v| order.iter().position(|&w| w == v).expect("site in order");
    let positions: Vec<usize> = r2.iter().map(index_of).collect();
    let conjugated = linalg::conjugate_local(&y, d, n, &positions, &k);
    let perm: Vec<usize> = union.iter().map(index_of).collect();
    let mut m = linalg::permute_factors(&conjugated, d, &perm);
    m.hermitize();
    let trace = m.real_trace();
    m.scale_in_place(1.0 / trace);
    Ok(MergeOutcome {
        state: DensityOperator::from_parts(union, d, m),
        trace_deviation: trace - 1.0,
        dropped_weight,
    })
}

fn overlap_trace(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j) * b.get(j, i);
            acc += z.re;
        }
    }
    acc
}

/// A left-associated chain `((initial ⊲ f_1) ⊲ f_2) … ⊲ f_n`.
#[derive(Clone, Debug)]
pub struct MergeExpression {
    initial: DensityOperator,
    factors: Vec<DensityOperator>,
    extensions: Vec<usize>,
}

impl MergeExpression {
    /// Factors that do not overlap the support built so far are recorded as tensor extensions.
    pub fn new(initial: DensityOperator, factors: Vec<DensityOperator>) -> Self {
        let mut support = initial.region().clone();
        let mut extensions = Vec::new();
        for (i, f) in factors.iter().enumerate() {
            if f.region().is_disjoint(&support) {
                extensions.push(i);
            }
            support = support.union(f.region());
        }
        Self {
            initial,
            factors,
            extensions,
        }
    }

    pub fn initial(&self) -> &DensityOperator {
        &self.initial
    }

    pub fn factors(&self) -> &[DensityOperator] {
        &self.factors
    }

    /// Indices of factors merged as plain tensor extensions.
    pub fn extensions(&self) -> &[usize] {
        &self.extensions
    }

    pub fn support(&self) -> Region {
        self.factors
            .iter()
            .fold(self.initial.region().clone(), |acc, f| acc.union(f.region()))
    }
}

pub fn merge_product(expr: &MergeExpression) -> Result<DensityOperator> {
    let mut state = expr.initial.clone();
    for (i, f) in expr.factors.iter().enumerate() {
        state = if expr.extensions.contains(&i) {
            log::warn!("merge factor {i} on {} extends the support without overlap", f.region());
            state.tensor(f)?
        } else {
            right_merge(&state, f)?
        };
    }
    Ok(state)
}

/// Left fold of right-merges over a factor list; the first factor is the initial state.
pub fn merge_chain(factors: &[DensityOperator]) -> Result<DensityOperator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Precondition("empty merge product".into()))?;
    merge_product(&MergeExpression::new(first.clone(), rest.to_vec()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveryCheck {
    pub markov: bool,
    /// Trace distance between `ρ_ABC` and `ρ_AB ⊲ ρ_BC`.
    pub residual: f64,
    pub cmi: f64,
    /// Whether `cmi <= tol` gives the same verdict as the recovery test.
    pub cmi_agrees: bool,
}

pub fn is_markov_via_recovery(
    op: &DensityOperator,
    a: &Region,
    b: &Region,
    c: &Region,
    tol: f64,
) -> Result<RecoveryCheck> {
    let cmi = op.cmi(a, b, c)?;
    let abc = op.partial_trace(&a.union(b).union(c))?;
    let ab = abc.partial_trace(&a.union(b))?;
    let bc = abc.partial_trace(&b.union(c))?;
    let recovered = if b.is_empty() {
        ab.tensor(&bc)?
    } else {
        right_merge(&ab, &bc)?
    };
    let residual = abc.trace_distance(&recovered)?;
    let markov = residual <= tol;
    Ok(RecoveryCheck {
        markov,
        residual,
        cmi,
        cmi_agrees: (cmi <= tol) == markov,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PreconditionPolicy {
    #[default]
    Strict,
    Warn,
}

#[derive(Clone, Debug)]
pub struct MergingOutcome {
    pub state: DensityOperator,
    /// Trace distance between `ρ_BC` and `σ_BC`.
    pub consistency: f64,
    /// `I(A:C|B)_ρ`.
    pub cmi_rho: f64,
    /// `I(B:D|C)_σ`.
    pub cmi_sigma: f64,
    pub warnings: Vec<String>,
}

/// `τ_ABCD = ρ_ABC ⊲ σ_CD` for consistent Markov inputs `ρ_ABC`, `σ_BCD`.
pub fn merging_lemma_combine(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    b: &Region,
    c: &Region,
    tol: f64,
    policy: PreconditionPolicy,
) -> Result<MergingOutcome> {
    let bc = b.union(c);
    if !b.is_disjoint(c) || c.is_empty() {
        return Err(Error::Precondition("B and C must be disjoint with C nonempty".into()));
    }
    if rho.region().intersection(sigma.region()) != bc {
        return Err(Error::Precondition(format!(
            "overlap of the inputs must be exactly {bc}"
        )));
    }
    let a = rho.region().difference(&bc);
    let d = sigma.region().difference(&bc);

    let consistency = rho.partial_trace(&bc)?.trace_distance(&sigma.partial_trace(&bc)?)?;
    let cmi_rho = rho.cmi(&a, b, c)?;
    let cmi_sigma = sigma.cmi(b, c, &d)?;
    let mut warnings = Vec::new();
    for (label, value) in [
        ("consistency on BC", consistency),
        ("I(A:C|B) of the first input", cmi_rho),
        ("I(B:D|C) of the second input", cmi_sigma),
    ] {
        if value > tol {
            let msg = format!("{label} is {value:.3e}, above {tol:.1e}");
            match policy {
                PreconditionPolicy::Strict => return Err(Error::Precondition(msg)),
                PreconditionPolicy::Warn => {
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }
    }
    let sigma_cd = sigma.partial_trace(&c.union(&d))?;
    let state = right_merge(rho, &sigma_cd)?;
    Ok(MergingOutcome {
        state,
        consistency,
        cmi_rho,
        cmi_sigma,
        warnings,
    })
}
