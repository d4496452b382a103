//! Brute-force maximum entropy subject to marginal constraints, by dual descent on
//! `f(λ) = ln Tr exp(Σ_r λ_r ⊗ I) − Σ_r Tr λ_r σ_r`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::Matrix;
use crate::operator::{dense_dim_with_limit, embed_operator, DensityOperator};

pub const MAXENT_DIM_LIMIT: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxEntOptions {
    /// Largest allowed trace norm of `ρ_r − σ_r` over constraints.
    pub tol: f64,
    pub max_iter: usize,
    /// Overlap mismatch above which constraints count as infeasible.
    pub feasibility_tol: f64,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 100_000,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxEntSolution {
    /// Entropy in bits.
    pub value: f64,
    #[serde(skip)]
    pub state: DensityOperator,
    pub residual: f64,
    pub iterations: usize,
}

struct Eval {
    f: f64,
    state: Matrix,
    grads: Vec<Matrix>,
    residual: f64,
}

fn hs(a: &Matrix, b: &Matrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn trace_norm(m: &Matrix) -> f64 {
    m.eigvalsh().iter().map(|l| l.abs()).sum()
}

struct Problem<'a> {
    constraints: &'a [DensityOperator],
    global: &'a Region,
    d: usize,
}

impl Problem<'_> {
    fn eval(&self, lambdas: &[Matrix]) -> Result<Eval> {
        let dim = dense_dim_with_limit(self.d, self.global.len(), MAXENT_DIM_LIMIT)?;
        let mut h = Matrix::zeros(dim);
        let mut linear = 0.0;
        for (lam, sigma) in lambdas.iter().zip(self.constraints) {
            h = &h + &embed_operator(lam, sigma.region(), self.global, self.d)?;
            linear += hs(lam, sigma.matrix());
        }
        h.hermitize();
        let (values, vectors) = h.eigh();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = values.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        let scaled = Matrix::from_fn(dim, |i, k| vectors.get(i, k) * (weights[k] / z));
        let mut state = scaled.matmul(&vectors.adjoint());
        state.hermitize();
        let rho = DensityOperator::from_parts(self.global.clone(), self.d, state.clone());
        let mut grads = Vec::with_capacity(lambdas.len());
        let mut residual: f64 = 0.0;
        for sigma in self.constraints {
            let g = rho.partial_trace(sigma.region())?.matrix() - sigma.matrix();
            residual = residual.max(trace_norm(&g));
            grads.push(g);
        }
        Ok(Eval {
            f: top + z.ln() - linear,
            state,
            grads,
            residual,
        })
    }
}

fn check_feasible(constraints: &[DensityOperator], global: &Region, tol: f64) -> Result<()> {
    for (i, s) in constraints.iter().enumerate() {
        if !s.region().is_subset(global) {
            return Err(Error::NotContained {
                sub: s.region().clone(),
                sup: global.clone(),
            });
        }
        for t in &constraints[i + 1..] {
            let overlap = s.region().intersection(t.region());
            if overlap.is_empty() {
                continue;
            }
            let residual = s.partial_trace(&overlap)?.trace_distance(&t.partial_trace(&overlap)?)?;
            if residual > tol {
                return Err(Error::Inconsistent {
                    region: overlap,
                    residual,
                    tol,
                });
            }
        }
    }
    Ok(())
}

/// Maximum-entropy state on `global` whose marginals equal every constraint.
///
/// Gradient descent on the dual with Barzilai–Borwein steps safeguarded by Armijo backtracking.
pub fn brute_force_maxent(
    constraints: &[DensityOperator],
    global: &Region,
    opts: MaxEntOptions,
) -> Result<MaxEntSolution> {
    let d = constraints
        .first()
        .ok_or_else(|| Error::Precondition("at least one constraint is required".into()))?
        .local_dim();
    if constraints.iter().any(|c| c.local_dim() != d) {
        return Err(Error::Precondition("local dimensions differ".into()));
    }
    dense_dim_with_limit(d, global.len(), MAXENT_DIM_LIMIT)?;
    check_feasible(constraints, global, opts.feasibility_tol)?;

    let problem = Problem { constraints, global, d };
    let mut lambdas: Vec<Matrix> = constraints.iter().map(|c| Matrix::zeros(c.dim())).collect();
    let mut cur = problem.eval(&lambdas)?;
    let mut step = 1.0;
    let mut best_residual = cur.residual;
    let mut stalled = 0;
    for iter in 0..opts.max_iter {
        if cur.residual <= opts.tol {
            let state = DensityOperator::from_parts(global.clone(), d, cur.state);
            return Ok(MaxEntSolution {
                value: state.entropy(),
                state,
                residual: cur.residual,
                iterations: iter,
            });
        }
        let gnorm2: f64 = cur.grads.iter().map(|g| hs(g, g)).sum();
        let mut t = step;
        let (next_lambdas, next) = loop {
            let trial: Vec<Matrix> = lambdas
                .iter()
                .zip(&cur.grads)
                .map(|(l, g)| l - &g.scaled(t))
                .collect();
            let eval = problem.eval(&trial)?;
            if eval.f <= cur.f - 1e-4 * t * gnorm2 || t < 1e-12 {
                break (trial, eval);
            }
            t *= 0.5;
        };
        // Barzilai–Borwein step for the next iteration.
        let mut ss = 0.0;
        let mut sy = 0.0;
        for ((ln, lo), (gn, go)) in next_lambdas.iter().zip(&lambdas).zip(next.grads.iter().zip(&cur.grads)) {
            let s = ln - lo;
            let y = gn - go;
            ss += hs(&s, &s);
            sy += hs(&s, &y);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-6, 1e6) } else { 1.0 };
        if next.f >= cur.f - 1e-15 * cur.f.abs().max(1.0) {
            stalled += 1;
            if stalled > 200 {
                break;
            }
        } else {
            stalled = 0;
        }
        lambdas = next_lambdas;
        cur = next;
        best_residual = best_residual.min(cur.residual);
    }
    if cur.residual <= opts.tol {
        let state = DensityOperator::from_parts(global.clone(), d, cur.state);
        return Ok(MaxEntSolution {
            value: state.entropy(),
            state,
            residual: cur.residual,
            iterations: opts.max_iter,
        });
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: best_residual,
    })
}
