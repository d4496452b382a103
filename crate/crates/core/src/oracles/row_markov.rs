//! Independent classical Markov chains along rows (or columns), optionally rotated by on-site
//! unitaries. Every marginal is computed exactly from the chain parameters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, Vertex};
use crate::linalg::Matrix;
use crate::marginals::{MarginalSet, Window};
use crate::operator::{dense_dim, DensityOperator};
use crate::oracles::random::{haar_unitary, random_distribution, random_stochastic, rng};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Rows,
    Columns,
}

/// A chain `p(s_0) T_0(s_0, s_1) T_1(s_1, s_2) …` along one line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub initial: Vec<f64>,
    /// `transitions[k][a][b] = P(s_{k+1} = b | s_k = a)`.
    pub transitions: Vec<Vec<Vec<f64>>>,
}

impl ChainSpec {
    fn validate(&self, d: usize, len: usize) -> Result<()> {
        let stochastic = |p: &[f64]| {
            p.len() == d && p.iter().all(|&x| x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-12
        };
        if !stochastic(&self.initial) {
            return Err(Error::Precondition("initial distribution is not a probability vector".into()));
        }
        if self.transitions.len() + 1 != len {
            return Err(Error::Precondition(format!(
                "chain of length {len} needs {} transitions, got {}",
                len - 1,
                self.transitions.len()
            )));
        }
        if !self.transitions.iter().all(|t| t.len() == d && t.iter().all(|row| stochastic(row))) {
            return Err(Error::Precondition("transition matrix is not row-stochastic".into()));
        }
        Ok(())
    }

    /// Distribution of the sites at `positions` (ascending), flattened most-significant first.
    fn joint(&self, d: usize, positions: &[usize]) -> Vec<f64> {
        let step = |dist: &[f64], t: &[Vec<f64>]| -> Vec<f64> {
            (0..d).map(|b| (0..d).map(|a| dist[a] * t[a][b]).sum()).collect()
        };
        let mut first = self.initial.clone();
        for t in &self.transitions[..positions[0]] {
            first = step(&first, t);
        }
        let mut joint = first;
        for w in positions.windows(2) {
            // transfer matrix from w[0] to w[1]
            let mut transfer: Vec<Vec<f64>> = (0..d)
                .map(|a| (0..d).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
                .collect();
            for t in &self.transitions[w[0]..w[1]] {
                transfer = transfer.iter().map(|row| step(row, t)).collect();
            }
            let mut next = Vec::with_capacity(joint.len() * d);
            for (idx, &p) in joint.iter().enumerate() {
                let last = idx % d;
                for b in 0..d {
                    next.push(p * transfer[last][b]);
                }
            }
            joint = next;
        }
        joint
    }
}

/// Product over lines of classical chains, conjugated by optional on-site unitaries.
#[derive(Clone, Debug)]
pub struct LineMarkovState {
    window: Window,
    local_dim: usize,
    orientation: Orientation,
    lines: Vec<ChainSpec>,
    unitaries: Option<BTreeMap<Vertex, Matrix>>,
    seed: Option<u64>,
}

impl LineMarkovState {
    pub fn new(
        window: Window,
        local_dim: usize,
        orientation: Orientation,
        lines: Vec<ChainSpec>,
        unitaries: Option<BTreeMap<Vertex, Matrix>>,
    ) -> Result<Self> {
        let (count, len) = match orientation {
            Orientation::Rows => (window.height, window.width),
            Orientation::Columns => (window.width, window.height),
        };
        if lines.len() != count {
            return Err(Error::Precondition(format!("expected {count} chains, got {}", lines.len())));
        }
        for line in &lines {
            line.validate(local_dim, len)?;
        }
        if let Some(us) = &unitaries {
            if us.len() != window.num_sites() || us.values().any(|u| u.dim() != local_dim) {
                return Err(Error::Precondition("one d x d unitary per site is required".into()));
            }
        }
        Ok(Self {
            window,
            local_dim,
            orientation,
            lines,
            unitaries,
            seed: None,
        })
    }

    /// Random strictly positive chains; Haar on-site unitaries when `rotate` is set.
    pub fn random(window: Window, local_dim: usize, orientation: Orientation, seed: u64, rotate: bool) -> Self {
        let mut r = rng(seed);
        let (count, len) = match orientation {
            Orientation::Rows => (window.height, window.width),
            Orientation::Columns => (window.width, window.height),
        };
        let lines = (0..count)
            .map(|_| ChainSpec {
                initial: random_distribution(local_dim, &mut r),
                transitions: (1..len).map(|_| random_stochastic(local_dim, &mut r)).collect(),
            })
            .collect();
        let unitaries = rotate.then(|| {
            window
                .region()
                .iter()
                .map(|v| (v, haar_unitary(local_dim, &mut r)))
                .collect()
        });
        let mut state = Self::new(window, local_dim, orientation, lines, unitaries)
            .expect("generated chains are valid");
        state.seed = Some(seed);
        state
    }

    /// Perfectly correlated uniform qubit lines (`s_0 = s_1 = …`, each line one bit).
    pub fn repetition(window: Window, orientation: Orientation) -> Self {
        let len = match orientation {
            Orientation::Rows => window.width,
            Orientation::Columns => window.height,
        };
        let count = window.num_sites() / len;
        let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let lines = (0..count)
            .map(|_| ChainSpec {
                initial: vec![0.5, 0.5],
                transitions: vec![identity.clone(); len - 1],
            })
            .collect();
        Self::new(window, 2, orientation, lines, None).expect("valid chains")
    }

    /// Independent uniform transitions: every site maximally mixed and uncorrelated.
    pub fn uniform(window: Window, local_dim: usize, orientation: Orientation) -> Self {
        let len = match orientation {
            Orientation::Rows => window.width,
            Orientation::Columns => window.height,
        };
        let count = window.num_sites() / len;
        let u = vec![1.0 / local_dim as f64; local_dim];
        let lines = (0..count)
            .map(|_| ChainSpec {
                initial: u.clone(),
                transitions: vec![vec![u.clone(); local_dim]; len - 1],
            })
            .collect();
        Self::new(window, local_dim, orientation, lines, None).expect("valid chains")
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn line_and_position(&self, v: Vertex) -> (usize, usize) {
        match self.orientation {
            Orientation::Rows => (v.y as usize, v.x as usize),
            Orientation::Columns => (v.x as usize, v.y as usize),
        }
    }

    /// Exact reduced state on `r`.
    pub fn marginal(&self, r: &Region) -> Result<DensityOperator> {
        if r.is_empty() || !r.iter().all(|v| self.window.contains(v)) {
            return Err(Error::NotContained {
                sub: r.clone(),
                sup: self.window.region(),
            });
        }
        dense_dim(self.local_dim, r.len())?;
        let mut by_line: BTreeMap<usize, Vec<(usize, Vertex)>> = BTreeMap::new();
        for v in r.iter() {
            let (line, pos) = self.line_and_position(v);
            by_line.entry(line).or_default().push((pos, v));
        }
        let mut parts = Vec::with_capacity(by_line.len());
        for (line, mut sites) in by_line {
            sites.sort();
            let positions: Vec<usize> = sites.iter().map(|(p, _)| *p).collect();
            let probs = self.lines[line].joint(self.local_dim, &positions);
            let region: Region = sites.iter().map(|(_, v)| *v).collect();
            parts.push(DensityOperator::from_parts(
                region,
                self.local_dim,
                Matrix::from_diagonal(&probs),
            ));
        }
        let mut state = DensityOperator::product(&parts)?;
        if let Some(us) = &self.unitaries {
            for v in r.iter() {
                state = state.conjugated(&Region::from_sites([v]), &us[&v])?;
            }
        }
        Ok(state)
    }

    pub fn global(&self) -> Result<DensityOperator> {
        self.marginal(&self.window.region())
    }

    pub fn marginal_set(&self) -> Result<MarginalSet> {
        MarginalSet::from_fn(self.window, self.local_dim, |_, region| self.marginal(region))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BlockPath;
    use crate::marginals::{check_local_consistency, check_markov_conditions};
    use crate::operator::med;

    fn row(y: i64, xs: std::ops::Range<i64>) -> Region {
        xs.map(|x| Vertex::new(x, y)).collect()
    }

    #[test]
    fn repetition_rows_carry_one_bit_each() {
        let st = LineMarkovState::repetition(Window::new(4, 3).unwrap(), Orientation::Rows);
        let m = st.marginal(&row(1, 0..4)).unwrap();
        assert!((m.entropy() - 1.0).abs() < 1e-12);
        assert!((st.global().unwrap().entropy() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_transitions_give_product() {
        let st = LineMarkovState::uniform(Window::new(3, 3).unwrap(), 2, Orientation::Columns);
        let m = st.marginal(&Window::new(3, 3).unwrap().region()).unwrap();
        assert!((m.entropy() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn marginals_agree_with_global_reduction() {
        let w = Window::new(3, 3).unwrap();
        for orientation in [Orientation::Rows, Orientation::Columns] {
            let st = LineMarkovState::random(w, 2, orientation, 5, true);
            let global = st.global().unwrap();
            let r: Region = [Vertex::new(0, 0), Vertex::new(2, 0), Vertex::new(1, 2)].into_iter().collect();
            let direct = st.marginal(&r).unwrap();
            let reduced = global.partial_trace(&r).unwrap();
            assert!(direct.trace_distance(&reduced).unwrap() < 1e-12);
        }
    }

    #[test]
    fn seed_42_satisfies_conditions() {
        let st = LineMarkovState::random(Window::new(4, 3).unwrap(), 2, Orientation::Rows, 42, false);
        let ms = st.marginal_set().unwrap();
        let report = check_markov_conditions(&ms, 1e-9);
        assert!(report.passed(), "{:?}", report.max_residual(None));
        assert!(check_local_consistency(&ms, 1e-9, true).passed());
        let global = st.global().unwrap();
        let cond = &crate::marginals::c_m_conditions(Vertex::new(3, 0))[7];
        assert!(global.cmi(&cond.a, &cond.b, &cond.c).unwrap().abs() < 1e-9);
    }

    #[test]
    fn chain_entropy_equals_med() {
        let w = Window::new(4, 1).unwrap();
        let st = LineMarkovState::random(w, 2, Orientation::Rows, 8, false);
        let g = st.global().unwrap();
        let path = BlockPath::row_major(&w.region()).unwrap();
        assert!((med(&g, &path).unwrap() - g.entropy()).abs() < 1e-9);
    }
}
