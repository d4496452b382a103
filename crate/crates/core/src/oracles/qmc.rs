//! Exact quantum Markov chains from the direct-sum structure of the conditioning system.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Region, Vertex};
use crate::linalg::{Matrix, C64};
use crate::operator::{dense_dim, DensityOperator};
use crate::oracles::random::{haar_unitary, random_density_matrix, random_distribution, rng};

/// A tripartite state with its parts laid out along row 0 as `A, B, C`.
#[derive(Clone, Debug)]
pub struct QmcTriple {
    pub state: DensityOperator,
    pub a: Region,
    pub b: Region,
    pub c: Region,
}

fn row_sites(range: std::ops::Range<i64>) -> Region {
    range.map(|x| Vertex::new(x, 0)).collect()
}

/// `ρ = ⊕_j p_j ρ_{A bL_j} ⊗ ρ_{bR_j C}` followed by a Haar unitary on `B`.
///
/// `blocks` lists `(dim bL_j, dim bR_j)`; the blocks must fit inside `B`.
pub fn gen_qmc_triple(
    local_dim: usize,
    sites: (usize, usize, usize),
    blocks: &[(usize, usize)],
    seed: u64,
) -> Result<QmcTriple> {
    let (na, nb, nc) = sites;
    if na == 0 || nb == 0 || nc == 0 || blocks.is_empty() {
        return Err(Error::Precondition("every part and the block list must be nonempty".into()));
    }
    let da = dense_dim(local_dim, na)?;
    let db = dense_dim(local_dim, nb)?;
    let dc = dense_dim(local_dim, nc)?;
    let total = dense_dim(local_dim, na + nb + nc)?;
    let used: usize = blocks.iter().map(|(l, r)| l * r).sum();
    if used > db || blocks.iter().any(|&(l, r)| l == 0 || r == 0) {
        return Err(Error::Precondition(format!(
            "blocks need {used} dimensions but B has {db}"
        )));
    }

    let mut r = rng(seed);
    let weights = random_distribution(blocks.len(), &mut r);
    let mut m = Matrix::zeros(total);
    let mut offset = 0;
    for (&(bl, br), &p) in blocks.iter().zip(&weights) {
        let left = random_density_matrix(da * bl, None, &mut r);
        let right = random_density_matrix(br * dc, None, &mut r);
        for a in 0..da {
            for l in 0..bl {
                for a2 in 0..da {
                    for l2 in 0..bl {
                        let x = left.get(a * bl + l, a2 * bl + l2);
                        if x == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for rr in 0..br {
                            for c in 0..dc {
                                for rr2 in 0..br {
                                    for c2 in 0..dc {
                                        let y = right.get(rr * dc + c, rr2 * dc + c2);
                                        let b = offset + l * br + rr;
                                        let b2 = offset + l2 * br + rr2;
                                        let i = (a * db + b) * dc + c;
                                        let j = (a2 * db + b2) * dc + c2;
                                        m.set(i, j, x * y * p);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        offset += bl * br;
    }
    m.hermitize();
    let a = row_sites(0..na as i64);
    let b = row_sites(na as i64..(na + nb) as i64);
    let c = row_sites((na + nb) as i64..(na + nb + nc) as i64);
    let region = a.union(&b).union(&c);
    let state = DensityOperator::from_parts(region, local_dim, m).conjugated(&b, &haar_unitary(db, &mut r))?;
    Ok(QmcTriple { state, a, b, c })
}

/// Inputs of the merging lemma: `ρ_ABC` and `σ_BCD`, both Markov and agreeing on `BC`.
#[derive(Clone, Debug)]
pub struct MarkovPair {
    pub rho: DensityOperator,
    pub sigma: DensityOperator,
    pub a: Region,
    pub b: Region,
    pub c: Region,
    pub d: Region,
}

/// Qubits `A=(0,0)`, `B=(1,0),(2,0)`, `C=(3,0)`, `D=(4,0)`.
pub fn gen_markov_pair(seed: u64) -> Result<MarkovPair> {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let blocks: &[(usize, usize)] = match r.gen_range(0..3) {
        0 => &[(2, 2)],
        1 => &[(1, 2), (2, 1)],
        _ => &[(1, 1), (1, 2), (1, 1)],
    };
    let triple = gen_qmc_triple(2, (1, 2, 1), blocks, seed)?;
    let (a, b, c) = (triple.a, triple.b, triple.c);

    // Dephase C so that ρ_BC = Σ_c ρ_{B,c} ⊗ |c><c|.
    let rho_m = triple.state.matrix();
    let n = rho_m.dim();
    let mut deph = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i % 2 == j % 2 {
                deph.set(i, j, rho_m.get(i, j));
            }
        }
    }
    let rho = DensityOperator::from_parts(triple.state.region().clone(), 2, deph);

    let d = Region::from_sites([Vertex::new(4, 0)]);
    let rho_bc = rho.partial_trace(&b.union(&c))?;
    let bc = rho_bc.matrix();
    let mut sigma_m = Matrix::zeros(16);
    for cval in 0..2 {
        let omega = random_density_matrix(2, None, &mut r);
        for b1 in 0..4 {
            for b2 in 0..4 {
                let x = bc.get(b1 * 2 + cval, b2 * 2 + cval);
                for d1 in 0..2 {
                    for d2 in 0..2 {
                        let i = (b1 * 2 + cval) * 2 + d1;
                        let j = (b2 * 2 + cval) * 2 + d2;
                        sigma_m.set(i, j, x * omega.get(d1, d2));
                    }
                }
            }
        }
    }
    sigma_m.hermitize();
    let sigma = DensityOperator::from_parts(b.union(&c).union(&d), 2, sigma_m);

    let u = haar_unitary(2, &mut r);
    Ok(MarkovPair {
        rho: rho.conjugated(&c, &u)?,
        sigma: sigma.conjugated(&c, &u)?,
        a,
        b,
        c,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::is_markov_via_recovery;

    #[test]
    fn trivial_blocks_are_products() {
        let t = gen_qmc_triple(2, (1, 1, 1), &[(1, 2)], 3).unwrap();
        let a_bc = t.state.partial_trace(&t.a).unwrap().tensor(&t.state.partial_trace(&t.b.union(&t.c)).unwrap());
        assert!(a_bc.unwrap().trace_distance(&t.state).unwrap() < 1e-12);
        let t = gen_qmc_triple(2, (1, 1, 1), &[(2, 1)], 3).unwrap();
        assert!(t.state.cmi(&t.a, &t.b, &t.c).unwrap().abs() < 1e-10);
    }

    #[test]
    fn two_blocks_seed_7() {
        let t = gen_qmc_triple(2, (1, 2, 1), &[(1, 2), (2, 1)], 7).unwrap();
        assert!(t.state.cmi(&t.a, &t.b, &t.c).unwrap().abs() < 1e-10);
        let check = is_markov_via_recovery(&t.state, &t.a, &t.b, &t.c, 1e-9).unwrap();
        assert!(check.markov, "{check:?}");
    }

    #[test]
    fn overflow_rejected() {
        assert!(gen_qmc_triple(2, (1, 1, 1), &[(2, 2)], 0).is_err());
    }

    #[test]
    fn markov_pair_is_consistent() {
        for seed in 0..5 {
            let p = gen_markov_pair(seed).unwrap();
            let bc = p.b.union(&p.c);
            let gap = p.rho.partial_trace(&bc).unwrap().trace_distance(&p.sigma.partial_trace(&bc).unwrap()).unwrap();
            assert!(gap < 1e-12);
            assert!(p.rho.cmi(&p.a, &p.b, &p.c).unwrap().abs() < 1e-10);
            assert!(p.sigma.cmi(&p.b, &p.c, &p.d).unwrap().abs() < 1e-10);
        }
    }
}
