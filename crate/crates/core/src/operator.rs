//! Density operators bound to lattice regions, entropies and distances.
//!
//! Entropies are returned in bits unless a [`LogBase`] is requested explicitly.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{BlockPath, Region};
use crate::linalg::{self, Matrix, C64, ZERO};

/// Largest matrix dimension the crate will materialize.
pub const MAX_DENSE_DIM: usize = 1 << 14;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVITY_ABORT` mark an invalid operator.
pub const NEGATIVITY_ABORT: f64 = 1e-8;
/// Eigenvalues in `[-NEGATIVITY_CLIP, 0)` are treated as zero without touching the matrix.
pub const NEGATIVITY_CLIP: f64 = 1e-10;
/// Support cutoff relative to the largest eigenvalue.
pub const RELATIVE_CUTOFF: f64 = 1e-10;

/// `d^sites`, refusing anything above `limit`.
pub fn dense_dim_with_limit(d: usize, sites: usize, limit: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
    if dim > limit as u128 {
        return Err(Error::DimensionGuard { dim, limit });
    }
    Ok(dim as usize)
}

pub fn dense_dim(d: usize, sites: usize) -> Result<usize> {
    dense_dim_with_limit(d, sites, MAX_DENSE_DIM)
}

/// Unit for reported entropies. Computation is always in bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    pub fn from_bits(self, bits: f64) -> f64 {
        match self {
            LogBase::Two => bits,
            LogBase::E => bits * std::f64::consts::LN_2,
        }
    }

    pub fn to_bits(self, value: f64) -> f64 {
        match self {
            LogBase::Two => value,
            LogBase::E => value / std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Two => "bits",
            LogBase::E => "nats",
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::Two => f.write_str("2"),
            LogBase::E => f.write_str("e"),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" | "bits" => Ok(LogBase::Two),
            "e" | "E" | "nats" => Ok(LogBase::E),
            other => Err(Error::Format(format!("unsupported log base {other:?}"))),
        }
    }
}

impl Serialize for LogBase {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LogBase::Two => serializer.serialize_u32(2),
            LogBase::E => serializer.serialize_str("e"),
        }
    }
}

impl<'de> Deserialize<'de> for LogBase {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) if x == 2.0 => Ok(LogBase::Two),
            Repr::Num(x) if (x - std::f64::consts::E).abs() < 1e-12 => Ok(LogBase::E),
            Repr::Num(x) => Err(serde::de::Error::custom(format!("unsupported log base {x}"))),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Von Neumann entropy in bits of a spectrum, ignoring eigenvalues below the relative cutoff.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0.0;
    }
    let cutoff = RELATIVE_CUTOFF * max;
    -eigenvalues
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|&l| l * l.log2())
        .sum::<f64>()
}

/// Eigen-based fractional powers of a Hermitian PSD matrix.
#[derive(Clone, Debug)]
pub struct PsdRoots {
    pub sqrt: Matrix,
    pub pinv_sqrt: Matrix,
    pub support: Matrix,
    pub rank: usize,
}

pub fn psd_roots(m: &Matrix) -> Result<PsdRoots> {
    let (values, vectors) = m.eigh();
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    if let Some(&min) = values.first() {
        if min < -NEGATIVITY_ABORT * max.max(1.0) {
            return Err(Error::InvalidState(format!(
                "eigenvalue {min:.3e} below the repair threshold"
            )));
        }
    }
    let cutoff = RELATIVE_CUTOFF * max;
    let n = m.dim();
    let v_adj = vectors.adjoint();
    let build = |f: &dyn Fn(f64) -> f64| {
        let scaled = Matrix::from_fn(n, |i, k| vectors.get(i, k) * f(values[k]));
        let mut out = scaled.matmul(&v_adj);
        out.hermitize();
        out
    };
    let on_support = |l: f64| l > cutoff;
    Ok(PsdRoots {
        sqrt: build(&|l| if on_support(l) { l.sqrt() } else { 0.0 }),
        pinv_sqrt: build(&|l| if on_support(l) { 1.0 / l.sqrt() } else { 0.0 }),
        support: build(&|l| if on_support(l) { 1.0 } else { 0.0 }),
        rank: values.iter().filter(|&&l| on_support(l)).count(),
    })
}

pub fn sqrt_psd(m: &Matrix) -> Result<Matrix> {
    Ok(psd_roots(m)?.sqrt)
}

/// Inverse square root on the numerical support, zero elsewhere.
pub fn pinv_sqrt_psd(m: &Matrix) -> Result<Matrix> {
    Ok(psd_roots(m)?.pinv_sqrt)
}

/// `op ⊗ I`, with `op` acting on `op_region ⊆ full`, reordered to `full`'s canonical order.
pub fn embed_operator(op: &Matrix, op_region: &Region, full: &Region, d: usize) -> Result<Matrix> {
    if !op_region.is_subset(full) {
        return Err(Error::NotContained {
            sub: op_region.clone(),
            sup: full.clone(),
        });
    }
    let rest = full.difference(op_region);
    let rest_dim = dense_dim(d, rest.len())?;
    dense_dim(d, full.len())?;
    let joint = op.kron(&Matrix::identity(rest_dim));
    let order: Vec<_> = op_region.iter().chain(rest.iter()).collect();
    let perm: Vec<usize> = full
        .iter()
        .map(|v| order.iter().position(|&w| w == v).expect("site in order"))
        .collect();
    Ok(linalg::permute_factors(&joint, d, &perm))
}

/// A positive trace-one matrix on the sites of a region, `local_dim` levels per site.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    region: Region,
    local_dim: usize,
    matrix: Matrix,
    spectrum: OnceLock<Vec<f64>>,
}

impl DensityOperator {
    /// Validates Hermiticity, trace and positivity. Slightly negative spectra are repaired.
    pub fn new(region: Region, local_dim: usize, matrix: Matrix) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::InvalidState(format!("local dimension {local_dim} < 2")));
        }
        let dim = dense_dim(local_dim, region.len())?;
        if matrix.dim() != dim {
            return Err(Error::InvalidState(format!(
                "matrix dimension {} does not match {} sites of dimension {local_dim}",
                matrix.dim(),
                region.len()
            )));
        }
        if matrix.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let herm = matrix.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max deviation {herm:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {:.12} + {:.3e}i is not 1",
                trace.re, trace.im
            )));
        }
        let mut matrix = matrix;
        matrix.hermitize();
        let values = matrix.eigvalsh();
        let min = values.first().copied().unwrap_or(0.0);
        if min < -NEGATIVITY_ABORT {
            return Err(Error::InvalidState(format!(
                "eigenvalue {min:.3e} below the repair threshold"
            )));
        }
        if min < -NEGATIVITY_CLIP {
            log::debug!("clipping negative eigenvalue {min:.3e}");
            let mut clipped = matrix.map_hermitian(|l| l.max(0.0));
            clipped.hermitize();
            let t = clipped.real_trace();
            clipped.scale_in_place(1.0 / t);
            return Ok(Self::from_parts(region, local_dim, clipped));
        }
        let state = Self::from_parts(region, local_dim, matrix);
        let _ = state.spectrum.set(values);
        Ok(state)
    }

    /// Skips validation; for operators built by trusted kernels.
    pub(crate) fn from_parts(region: Region, local_dim: usize, matrix: Matrix) -> Self {
        debug_assert_eq!(matrix.dim(), local_dim.pow(region.len() as u32));
        Self {
            region,
            local_dim,
            matrix,
            spectrum: OnceLock::new(),
        }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(region: Region, local_dim: usize, psi: &[C64]) -> Result<Self> {
        let dim = dense_dim(local_dim, region.len())?;
        if psi.len() != dim {
            return Err(Error::InvalidState(format!(
                "state vector length {} does not match dimension {dim}",
                psi.len()
            )));
        }
        let norm: f64 = psi.iter().map(|z| z.re * z.re + z.im * z.im).sum();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let m = Matrix::outer(psi).scaled(1.0 / norm);
        Ok(Self::from_parts(region, local_dim, m))
    }

    pub fn maximally_mixed(region: Region, local_dim: usize) -> Result<Self> {
        let dim = dense_dim(local_dim, region.len())?;
        Ok(Self::from_parts(
            region,
            local_dim,
            Matrix::identity(dim).scaled(1.0 / dim as f64),
        ))
    }

    /// Diagonal state from a probability vector in the computational basis.
    pub fn diagonal(region: Region, local_dim: usize, probs: &[f64]) -> Result<Self> {
        let dim = dense_dim(local_dim, region.len())?;
        if probs.len() != dim {
            return Err(Error::InvalidState(format!(
                "probability vector length {} does not match dimension {dim}",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidState("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(Self::from_parts(region, local_dim, Matrix::from_diagonal(probs)))
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Eigenvalues in ascending order (computed once).
    pub fn spectrum(&self) -> &[f64] {
        self.spectrum.get_or_init(|| self.matrix.eigvalsh())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().first().copied().unwrap_or(0.0)
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        spectrum_entropy(self.spectrum())
    }

    pub fn entropy_in(&self, base: LogBase) -> f64 {
        base.from_bits(self.entropy())
    }

    pub fn partial_trace(&self, keep: &Region) -> Result<Self> {
        if keep == &self.region {
            return Ok(self.clone());
        }
        let positions = self.region.positions_of(keep).ok_or_else(|| Error::NotContained {
            sub: keep.clone(),
            sup: self.region.clone(),
        })?;
        let m = linalg::partial_trace(&self.matrix, self.local_dim, self.region.len(), &positions);
        Ok(Self::from_parts(keep.clone(), self.local_dim, m))
    }

    /// Entropy in bits of the reduction to `r` (zero for the empty region).
    pub fn entropy_of(&self, r: &Region) -> Result<f64> {
        if r.is_empty() {
            return Ok(0.0);
        }
        if r == &self.region {
            return Ok(self.entropy());
        }
        Ok(self.partial_trace(r)?.entropy())
    }

    /// `I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC)` in bits.
    pub fn cmi(&self, a: &Region, b: &Region, c: &Region) -> Result<f64> {
        check_disjoint(a, b, c)?;
        let abc = a.union(b).union(c);
        if !abc.is_subset(&self.region) {
            return Err(Error::NotContained {
                sub: abc,
                sup: self.region.clone(),
            });
        }
        let joint = self.partial_trace(&abc)?;
        let s_ab = joint.entropy_of(&a.union(b))?;
        let s_bc = joint.entropy_of(&b.union(c))?;
        let s_b = joint.entropy_of(b)?;
        let s_abc = joint.entropy();
        Ok((s_ab + s_bc) - s_b - s_abc)
    }

    /// `½‖self − other‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        self.check_same_space(other)?;
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * diff.eigvalsh().iter().map(|l| l.abs()).sum::<f64>())
    }

    /// `w·self + (1−w)·other`.
    pub fn mixture(&self, other: &DensityOperator, w: f64) -> Result<Self> {
        self.check_same_space(other)?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Precondition(format!("mixture weight {w} outside [0,1]")));
        }
        let m = &self.matrix.scaled(w) + &other.matrix.scaled(1.0 - w);
        Ok(Self::from_parts(self.region.clone(), self.local_dim, m))
    }

    /// `(1−p)ρ + p·I/D`.
    pub fn depolarized(&self, p: f64) -> Result<Self> {
        let mixed = Self::maximally_mixed(self.region.clone(), self.local_dim)?;
        mixed.mixture(self, p)
    }

    /// Tensor product with an operator on a disjoint region, in canonical order.
    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        if self.local_dim != other.local_dim {
            return Err(Error::Precondition("local dimensions differ".into()));
        }
        if !self.region.is_disjoint(&other.region) {
            return Err(Error::Overlap(format!("{} and {}", self.region, other.region)));
        }
        let union = self.region.union(&other.region);
        dense_dim(self.local_dim, union.len())?;
        let joint = self.matrix.kron(&other.matrix);
        let order: Vec<_> = self.region.iter().chain(other.region.iter()).collect();
        let perm: Vec<usize> = union
            .iter()
            .map(|v| order.iter().position(|&w| w == v).expect("site in order"))
            .collect();
        let m = linalg::permute_factors(&joint, self.local_dim, &perm);
        Ok(Self::from_parts(union, self.local_dim, m))
    }

    /// Tensor product of operators on pairwise-disjoint regions.
    pub fn product(parts: &[DensityOperator]) -> Result<Self> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::Precondition("empty product".into()))?;
        rest.iter().try_fold(first.clone(), |acc, p| acc.tensor(p))
    }

    /// `(U ⊗ I) ρ (U ⊗ I)†` with `U` acting on `sites ⊆ region` in their canonical order.
    pub fn conjugated(&self, sites: &Region, u: &Matrix) -> Result<Self> {
        let positions = self.region.positions_of(sites).ok_or_else(|| Error::NotContained {
            sub: sites.clone(),
            sup: self.region.clone(),
        })?;
        if u.dim() != dense_dim(self.local_dim, sites.len())? {
            return Err(Error::Precondition("operator dimension does not match sites".into()));
        }
        let mut m = linalg::conjugate_local(
            &self.matrix,
            self.local_dim,
            self.region.len(),
            &positions,
            u,
        );
        m.hermitize();
        Ok(Self::from_parts(self.region.clone(), self.local_dim, m))
    }

    /// Same matrix on the region shifted by `(dx, dy)`.
    pub fn translated(&self, dx: i64, dy: i64) -> Self {
        Self {
            region: self.region.translated(dx, dy),
            local_dim: self.local_dim,
            matrix: self.matrix.clone(),
            spectrum: self.spectrum.clone(),
        }
    }

    /// `Re Tr[ρ O]` for an operator on the full region.
    pub fn expectation(&self, op: &Matrix) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::Precondition("operator dimension mismatch".into()));
        }
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.matrix.get(i, j) * op.get(j, i);
            }
        }
        Ok(acc.re)
    }

    fn check_same_space(&self, other: &DensityOperator) -> Result<()> {
        if self.region != other.region || self.local_dim != other.local_dim {
            return Err(Error::Precondition(format!(
                "operators live on different spaces: {} vs {}",
                self.region, other.region
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_disjoint(a: &Region, b: &Region, c: &Region) -> Result<()> {
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::Overlap(format!("A={a} B={b} C={c}")));
    }
    Ok(())
}

/// Anything that can report the entropy (bits) of a region's reduced state.
pub trait EntropyProvider {
    fn entropy_of(&self, region: &Region) -> Result<f64>;

    fn cmi(&self, a: &Region, b: &Region, c: &Region) -> Result<f64> {
        check_disjoint(a, b, c)?;
        let s_ab = self.entropy_of(&a.union(b))?;
        let s_bc = self.entropy_of(&b.union(c))?;
        let s_b = self.entropy_of(b)?;
        let s_abc = self.entropy_of(&a.union(b).union(c))?;
        Ok((s_ab + s_bc) - s_b - s_abc)
    }
}

impl EntropyProvider for DensityOperator {
    fn entropy_of(&self, region: &Region) -> Result<f64> {
        DensityOperator::entropy_of(self, region)
    }
}

/// Markov entropy decomposition `Σ_k S(block_k | N(block_k) ∩ V_{k−1})` in bits.
pub fn med<P: EntropyProvider + ?Sized>(provider: &P, path: &BlockPath) -> Result<f64> {
    let mut total = 0.0;
    for (block, cond) in path.conditioning_pairs() {
        total += provider.entropy_of(&block.union(&cond))? - provider.entropy_of(&cond)?;
    }
    Ok(total)
}

/// `S((ρ+σ)/2) − ½(S(ρ)+S(σ))` in nats.
pub fn jensen_gap_nats(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let mid = rho.mixture(sigma, 0.5)?;
    let gap_bits = mid.entropy() - 0.5 * (rho.entropy() + sigma.entropy());
    Ok(LogBase::E.from_bits(gap_bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Vertex;

    fn row(n: i64) -> Region {
        Region::from_sites((0..n).map(|x| Vertex::new(x, 0)))
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ghz3() -> DensityOperator {
        let mut psi = vec![c(0.0); 8];
        psi[0] = c(1.0);
        psi[7] = c(1.0);
        DensityOperator::pure(row(3), 2, &psi).unwrap()
    }

    fn site(x: i64) -> Region {
        Region::from_sites([Vertex::new(x, 0)])
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityOperator::pure(row(1), 2, &[c(1.0), c(0.0)]).unwrap();
        assert!(pure.entropy().abs() < 1e-12);
        let mixed = DensityOperator::maximally_mixed(row(1), 2).unwrap();
        assert!((mixed.entropy() - 1.0).abs() < 1e-12);
        let qutrit = DensityOperator::diagonal(row(1), 3, &[0.5, 0.25, 0.25]).unwrap();
        assert!((qutrit.entropy() - 1.5).abs() < 1e-12);
        assert!((mixed.entropy_in(LogBase::E) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let g = ghz3();
        let two = g.partial_trace(&row(2)).unwrap();
        let expect = Matrix::from_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert!(two.matrix().max_abs_diff(&expect) < 1e-14);
        let same = g.partial_trace(g.region()).unwrap();
        assert!(same.matrix().max_abs_diff(g.matrix()) < 1e-15);
        assert!(g.partial_trace(&site(7)).is_err());

        let alpha = DensityOperator::diagonal(site(0), 2, &[0.3, 0.7]).unwrap();
        let beta = DensityOperator::diagonal(site(1), 2, &[0.9, 0.1]).unwrap();
        let ab = alpha.tensor(&beta).unwrap();
        assert!(ab.partial_trace(&site(0)).unwrap().matrix().max_abs_diff(alpha.matrix()) < 1e-15);
    }

    #[test]
    fn cmi_examples() {
        let g = ghz3();
        assert!((g.cmi(&site(0), &site(1), &site(2)).unwrap() - 1.0).abs() < 1e-10);
        let mut p = vec![0.0; 8];
        p[0] = 0.5;
        p[7] = 0.5;
        let classical = DensityOperator::diagonal(row(3), 2, &p).unwrap();
        assert!(classical.cmi(&site(0), &site(1), &site(2)).unwrap().abs() < 1e-12);
        assert!(g.cmi(&site(0), &site(0), &site(2)).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityOperator::pure(row(1), 2, &[c(1.0), c(0.0)]).unwrap();
        let one = DensityOperator::pure(row(1), 2, &[c(0.0), c(1.0)]).unwrap();
        let mixed = DensityOperator::maximally_mixed(row(1), 2).unwrap();
        assert!(zero.trace_distance(&zero).unwrap().abs() < 1e-15);
        assert!((zero.trace_distance(&one).unwrap() - 1.0).abs() < 1e-12);
        assert!((zero.trace_distance(&mixed).unwrap() - 0.5).abs() < 1e-12);
        assert!(zero.trace_distance(&ghz3()).is_err());
    }

    #[test]
    fn root_examples() {
        let half = Matrix::identity(2).scaled(0.5);
        let roots = psd_roots(&half).unwrap();
        assert!(roots.sqrt.max_abs_diff(&Matrix::identity(2).scaled(0.5f64.sqrt())) < 1e-12);
        assert!(roots.pinv_sqrt.max_abs_diff(&Matrix::identity(2).scaled(2f64.sqrt())) < 1e-12);

        let p = Matrix::from_diagonal(&[1.0, 0.0]);
        assert!(sqrt_psd(&p).unwrap().max_abs_diff(&p) < 1e-12);
        assert!(pinv_sqrt_psd(&p).unwrap().max_abs_diff(&p) < 1e-12);

        let m = Matrix::from_diagonal(&[0.8, 0.2]);
        let s5 = 5f64.sqrt();
        assert!(sqrt_psd(&m).unwrap().max_abs_diff(&Matrix::from_diagonal(&[2.0 / s5, 1.0 / s5])) < 1e-12);
        assert!(pinv_sqrt_psd(&m).unwrap().max_abs_diff(&Matrix::from_diagonal(&[0.5 * s5, s5])) < 1e-12);

        assert!(psd_roots(&Matrix::from_diagonal(&[1.0, -1e-6])).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let r = row(1);
        assert!(DensityOperator::new(r.clone(), 2, Matrix::from_diagonal(&[0.6, 0.6])).is_err());
        assert!(DensityOperator::new(r.clone(), 2, Matrix::from_diagonal(&[1.1, -0.1])).is_err());
        let mut skew = Matrix::from_diagonal(&[0.5, 0.5]);
        skew.set(0, 1, c(0.1));
        assert!(DensityOperator::new(r.clone(), 2, skew).is_err());
        assert!(DensityOperator::new(r.clone(), 2, Matrix::identity(4).scaled(0.25)).is_err());
        let repaired =
            DensityOperator::new(r, 2, Matrix::from_diagonal(&[1.0 + 1e-9, -1e-9])).unwrap();
        assert!(repaired.min_eigenvalue() >= 0.0);
        assert!((repaired.matrix().real_trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn med_of_product_is_sum_of_site_entropies() {
        let parts: Vec<_> = (0..3)
            .map(|x| DensityOperator::diagonal(site(x), 2, &[0.2 + 0.1 * x as f64, 0.8 - 0.1 * x as f64]).unwrap())
            .collect();
        let prod = DensityOperator::product(&parts).unwrap();
        let total: f64 = parts.iter().map(|p| p.entropy()).sum();
        let path = BlockPath::row_major(prod.region()).unwrap();
        assert!((med(&prod, &path).unwrap() - total).abs() < 1e-12);
        assert!((prod.entropy() - total).abs() < 1e-12);
    }

    #[test]
    fn log_base_serialization() {
        assert_eq!(serde_json::to_string(&LogBase::Two).unwrap(), "2");
        assert_eq!(serde_json::to_string(&LogBase::E).unwrap(), "\"e\"");
        assert_eq!(serde_json::from_str::<LogBase>("2").unwrap(), LogBase::Two);
        assert_eq!(serde_json::from_str::<LogBase>("\"e\"").unwrap(), LogBase::E);
        assert!(serde_json::from_str::<LogBase>("10").is_err());
    }

    #[test]
    fn dimension_guard() {
        assert!(dense_dim(2, 14).is_ok());
        assert!(matches!(dense_dim(2, 15), Err(Error::DimensionGuard { .. })));
        assert!(dense_dim(2, 200).is_err());
    }
}
