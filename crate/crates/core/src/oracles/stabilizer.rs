//! Stabilizer states over GF(2): exact entropies from ranks of the check matrix.
//!
//! Rows are generators, columns are the X part followed by the Z part (one column per site in
//! canonical order). Signs are not stored; entropies do not depend on them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Region, Vertex};
use crate::linalg::{Matrix, C64};
use crate::marginals::Window;
use crate::operator::{dense_dim, DensityOperator};
use crate::oracles::random::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
struct PauliRow {
    x: Vec<bool>,
    z: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct StabilizerState {
    sites: Region,
    rows: Vec<PauliRow>,
    rank: usize,
}

fn pack(bits: impl Iterator<Item = bool>) -> Vec<u64> {
    let mut words = Vec::new();
    for (i, b) in bits.enumerate() {
        if i % 64 == 0 {
            words.push(0);
        }
        if b {
            *words.last_mut().expect("word") |= 1 << (i % 64);
        }
    }
    words
}

/// Rank over GF(2) of bit rows.
pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let width = rows.iter().map(|r| r.len() * 64).max().unwrap_or(0);
    let mut rank = 0;
    for col in 0..width {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(w).map_or(false, |x| x & bit != 0)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(w).map_or(false, |x| x & bit != 0) {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

impl StabilizerState {
    /// Generators as `(x, z)` bit vectors over `sites` in canonical order.
    pub fn new(sites: Region, generators: Vec<(Vec<bool>, Vec<bool>)>) -> Result<Self> {
        let n = sites.len();
        let rows: Vec<PauliRow> = generators
            .into_iter()
            .map(|(x, z)| {
                if x.len() != n || z.len() != n {
                    return Err(Error::Precondition(format!("generator length must be {n}")));
                }
                Ok(PauliRow { x, z })
            })
            .collect::<Result<_>>()?;
        for (i, a) in rows.iter().enumerate() {
            for b in &rows[i + 1..] {
                let symplectic = (0..n).filter(|&k| (a.x[k] && b.z[k]) ^ (a.z[k] && b.x[k])).count();
                if symplectic % 2 == 1 {
                    return Err(Error::Precondition("generators do not commute".into()));
                }
            }
        }
        let mut st = Self { sites, rows, rank: 0 };
        st.rank = gf2_rank(st.packed(|_| true));
        if st.rank != st.rows.len() {
            return Err(Error::Precondition("generators are not independent".into()));
        }
        Ok(st)
    }

    /// Check matrix rows `[x_1..x_n, z_1..z_n]` as 0/1 bytes.
    pub fn from_check_matrix(sites: Region, matrix: &[Vec<u8>]) -> Result<Self> {
        let n = sites.len();
        let gens = matrix
            .iter()
            .map(|row| {
                if row.len() != 2 * n {
                    return Err(Error::Precondition(format!("check-matrix rows need {} columns", 2 * n)));
                }
                Ok((row[..n].iter().map(|&b| b != 0).collect(), row[n..].iter().map(|&b| b != 0).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites, gens)
    }

    pub fn check_matrix(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| r.x.iter().chain(&r.z).map(|&b| b as u8).collect())
            .collect()
    }

    /// `Z_i Z_{i+1}` along every row of the window.
    pub fn repetition_rows(window: Window) -> Self {
        let sites = window.region();
        let n = sites.len();
        let mut gens = Vec::new();
        for y in 0..window.height as i64 {
            for x in 0..window.width as i64 - 1 {
                let mut z = vec![false; n];
                z[sites.position(Vertex::new(x, y)).expect("site")] = true;
                z[sites.position(Vertex::new(x + 1, y)).expect("site")] = true;
                gens.push((vec![false; n], z));
            }
        }
        Self::new(sites, gens).expect("repetition generators commute")
    }

    /// Random Clifford image of `Z_1..Z_n`, keeping `keep` of the generators.
    pub fn random(sites: Region, keep: usize, seed: u64) -> Self {
        let n = sites.len();
        let mut r = rng(seed);
        let mut rows: Vec<PauliRow> = (0..n)
            .map(|i| {
                let mut z = vec![false; n];
                z[i] = true;
                PauliRow { x: vec![false; n], z }
            })
            .collect();
        for _ in 0..(6 * n + 4) {
            match r.gen_range(0..3) {
                0 => {
                    let q = r.gen_range(0..n);
                    for row in &mut rows {
                        std::mem::swap(&mut row.x[q], &mut row.z[q]);
                    }
                }
                1 => {
                    let q = r.gen_range(0..n);
                    for row in &mut rows {
                        row.z[q] ^= row.x[q];
                    }
                }
                _ if n > 1 => {
                    let c = r.gen_range(0..n);
                    let t = (c + r.gen_range(1..n)) % n;
                    for row in &mut rows {
                        row.x[t] ^= row.x[c];
                        row.z[c] ^= row.z[t];
                    }
                }
                _ => {}
            }
        }
        rows.truncate(keep.min(n));
        let gens = rows.into_iter().map(|p| (p.x, p.z)).collect();
        Self::new(sites, gens).expect("Clifford images commute and stay independent")
    }

    pub fn sites(&self) -> &Region {
        &self.sites
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn packed(&self, keep_site: impl Fn(usize) -> bool) -> Vec<Vec<u64>> {
        let n = self.sites.len();
        self.rows
            .iter()
            .map(|row| {
                pack(
                    (0..n)
                        .filter(|&k| keep_site(k))
                        .map(|k| row.x[k])
                        .chain((0..n).filter(|&k| keep_site(k)).map(|k| row.z[k])),
                )
            })
            .collect()
    }

    /// `S(ρ_A) = |A| − (rank G − rank G|_{Ā})` bits.
    pub fn entropy(&self, a: &Region) -> Result<i64> {
        let inside = self.sites.positions_of(a).ok_or_else(|| Error::NotContained {
            sub: a.clone(),
            sup: self.sites.clone(),
        })?;
        let outside_rank = gf2_rank(self.packed(|k| !inside.contains(&k)));
        Ok(a.len() as i64 - (self.rank as i64 - outside_rank as i64))
    }

    /// Dense `Π_i (I + g_i)/2`, normalized.
    pub fn to_density(&self) -> Result<DensityOperator> {
        let n = self.sites.len();
        let dim = dense_dim(2, n)?;
        let mut m = Matrix::identity(dim);
        for row in &self.rows {
            let flip = (0..n).fold(0usize, |acc, k| acc | ((row.x[k] as usize) << (n - 1 - k)));
            let zmask = (0..n).fold(0usize, |acc, k| acc | ((row.z[k] as usize) << (n - 1 - k)));
            let ys = (0..n).filter(|&k| row.x[k] && row.z[k]).count();
            let phase = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][ys % 4];
            let mut next = m.clone();
            for s in 0..dim {
                let sign = if (s & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                let target = s ^ flip;
                let coeff = phase * sign;
                for j in 0..dim {
                    let v = next.get(target, j) + coeff * m.get(s, j);
                    next.set(target, j, v);
                }
            }
            next.scale_in_place(0.5);
            m = next;
        }
        m.hermitize();
        let t = m.real_trace();
        m.scale_in_place(1.0 / t);
        Ok(DensityOperator::from_parts(self.sites.clone(), 2, m))
    }
}
