//! Seeded random matrices and distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::lattice::Region;
use crate::linalg::{Matrix, C64};
use crate::operator::{dense_dim, DensityOperator};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `dim x dim` complex Gaussian matrix with only the first `cols` columns populated.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(dim, |_, j| if j < cols { normal_c64(rng) } else { C64::new(0.0, 0.0) })
}

/// `G G† / Tr` for a Ginibre `G` of the given rank (full rank by default).
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: Option<usize>, rng: &mut R) -> Matrix {
    let g = ginibre(dim, rank.unwrap_or(dim).clamp(1, dim), rng);
    let mut m = g.matmul(&g.adjoint());
    m.hermitize();
    let t = m.real_trace();
    m.scale_in_place(1.0 / t);
    m
}

pub fn random_density<R: Rng + ?Sized>(
    region: Region,
    local_dim: usize,
    rank: Option<usize>,
    rng: &mut R,
) -> Result<DensityOperator> {
    let dim = dense_dim(local_dim, region.len())?;
    Ok(DensityOperator::from_parts(
        region,
        local_dim,
        random_density_matrix(dim, rank, rng),
    ))
}

/// Haar-random unitary from the polar part of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = ginibre(dim, dim, rng);
    let gram = g.adjoint().matmul(&g);
    g.matmul(&gram.map_hermitian(|l| 1.0 / l.sqrt()))
}

/// Probability vector with entries bounded away from zero.
pub fn random_distribution<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Row-stochastic matrix with strictly positive entries.
pub fn random_stochastic<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..d).map(|_| random_distribution(d, rng)).collect()
}
