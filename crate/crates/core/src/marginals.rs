//! Fundamental 3x3 marginals over a finite window: Markov conditions, local consistency and
//! derived sub-marginals.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cluster_region, rotate_pi_local, LocalCoord, Region, Vertex};
use crate::linalg::Matrix;
use crate::operator::{DensityOperator, EntropyProvider};
use crate::report::{CheckKind, CheckRecord, CheckReport};

/// Default tolerances: CMI and consistency per check, reconstruction for accumulated results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub cmi: f64,
    pub consistency: f64,
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cmi: 1e-8,
            consistency: 1e-8,
            reconstruction: 1e-6,
        }
    }
}

/// Sites `0..width × 0..height`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub width: usize,
    pub height: usize,
}

impl Window {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "window must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn contains(&self, v: Vertex) -> bool {
        (0..self.width as i64).contains(&v.x) && (0..self.height as i64).contains(&v.y)
    }

    pub fn region(&self) -> Region {
        Region::from_sites(
            (0..self.height as i64)
                .flat_map(|y| (0..self.width as i64).map(move |x| Vertex::new(x, y))),
        )
    }

    pub fn num_sites(&self) -> usize {
        self.width * self.height
    }

    /// Anchors of the 3x3 clusters fully inside the window, canonically ordered.
    pub fn cluster_anchors(&self) -> Vec<Vertex> {
        let mut out = Vec::new();
        for y in 0..(self.height as i64 - 2).max(0) {
            for x in 2..self.width as i64 {
                out.push(Vertex::new(x, y));
            }
        }
        out
    }

    pub fn has_cluster(&self, anchor: Vertex) -> bool {
        anchor.x >= 2
            && anchor.x < self.width as i64
            && anchor.y >= 0
            && anchor.y + 2 < self.height as i64
    }

    pub fn clip(&self, r: &Region) -> Region {
        r.iter().filter(|&v| self.contains(v)).collect()
    }

    /// The 8 conditions at `anchor`, failing if its cluster is not inside the window.
    pub fn conditions_at(&self, anchor: Vertex) -> Result<Vec<CmCondition>> {
        if !self.has_cluster(anchor) {
            return Err(Error::Geometry(format!(
                "3x3 cluster at {anchor} is not inside the {}x{} window",
                self.width, self.height
            )));
        }
        Ok(c_m_conditions(anchor))
    }
}

/// One of the eight Markov conditions `I(A:C|B) = 0` of a 3x3 cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmCondition {
    pub anchor: Vertex,
    /// `0..4` are the base patterns, `4..8` their π-rotations.
    pub index: u8,
    pub a: Region,
    pub b: Region,
    pub c: Region,
}

impl CmCondition {
    pub fn support(&self) -> Region {
        self.a.union(&self.b).union(&self.c)
    }

    pub fn is_rotated(&self) -> bool {
        self.index >= 4
    }
}

type Pattern = (&'static [(u8, u8)], &'static [(u8, u8)], &'static [(u8, u8)]);

const BASE_PATTERNS: [Pattern; 4] = [
    (&[(1, 0)], &[(0, 0)], &[(0, 1)]),
    (&[(2, 0), (2, 1)], &[(1, 0), (1, 1)], &[(0, 0), (0, 1), (0, 2), (1, 2)]),
    (&[(0, 0), (1, 0), (2, 0), (2, 1)], &[(0, 1), (1, 1)], &[(0, 2), (1, 2)]),
    (&[(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)], &[(1, 1), (2, 1), (1, 2)], &[(2, 2)]),
];

/// The four base patterns followed by their rotations, in cluster-local coordinates.
pub fn local_patterns() -> Vec<[Vec<LocalCoord>; 3]> {
    let to_local = |cells: &[(u8, u8)]| -> Vec<LocalCoord> {
        cells.iter().map(|&(x, y)| LocalCoord { x, y }).collect()
    };
    let base: Vec<[Vec<LocalCoord>; 3]> = BASE_PATTERNS
        .iter()
        .map(|(a, b, c)| [to_local(a), to_local(b), to_local(c)])
        .collect();
    let rotated: Vec<[Vec<LocalCoord>; 3]> = base
        .iter()
        .map(|parts| {
            parts.clone().map(|cells| {
                cells
                    .into_iter()
                    .map(|p| rotate_pi_local(p).expect("pattern inside 3x3"))
                    .collect()
            })
        })
        .collect();
    base.into_iter().chain(rotated).collect()
}

/// The eight conditions of the 3x3 cluster anchored at `anchor`, in absolute coordinates.
pub fn c_m_conditions(anchor: Vertex) -> Vec<CmCondition> {
    local_patterns()
        .into_iter()
        .enumerate()
        .map(|(index, [a, b, c])| {
            let embed = |cells: Vec<LocalCoord>| -> Region {
                cells.into_iter().map(|p| p.embed(anchor)).collect()
            };
            let cond = CmCondition {
                anchor,
                index: index as u8,
                a: embed(a),
                b: embed(b),
                c: embed(c),
            };
            assert!(
                cond.a.is_disjoint(&cond.b) && cond.a.is_disjoint(&cond.c) && cond.b.is_disjoint(&cond.c),
                "condition {index} is not disjoint"
            );
            cond
        })
        .collect()
}

/// Fundamental marginals keyed by the anchor of each 3x3 cluster inside the window.
pub struct MarginalSet {
    window: Window,
    local_dim: usize,
    marginals: BTreeMap<Vertex, DensityOperator>,
    consistency_tol: f64,
    derived: Mutex<HashMap<Region, DensityOperator>>,
    entropies: Mutex<HashMap<Region, f64>>,
}

impl Clone for MarginalSet {
    fn clone(&self) -> Self {
        Self {
            window: self.window,
            local_dim: self.local_dim,
            marginals: self.marginals.clone(),
            consistency_tol: self.consistency_tol,
            derived: Mutex::default(),
            entropies: Mutex::default(),
        }
    }
}

impl std::fmt::Debug for MarginalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MarginalSet")
            .field("window", &self.window)
            .field("local_dim", &self.local_dim)
            .field("clusters", &self.marginals.len())
            .finish()
    }
}

impl MarginalSet {
    pub fn new(window: Window, local_dim: usize, marginals: BTreeMap<Vertex, DensityOperator>) -> Result<Self> {
        let expected = window.cluster_anchors();
        for anchor in &expected {
            let op = marginals.get(anchor).ok_or_else(|| {
                Error::Format(format!("missing marginal for the cluster at {anchor}"))
            })?;
            let region = cluster_region(*anchor, 3, 3)?;
            if op.region() != &region {
                return Err(Error::Format(format!(
                    "marginal at {anchor} lives on {} instead of {region}",
                    op.region()
                )));
            }
            if op.local_dim() != local_dim {
                return Err(Error::Format(format!(
                    "marginal at {anchor} has local dimension {}, expected {local_dim}",
                    op.local_dim()
                )));
            }
        }
        if let Some(extra) = marginals.keys().find(|a| !window.has_cluster(**a)) {
            return Err(Error::Format(format!(
                "marginal at {extra} is not a 3x3 cluster inside the window"
            )));
        }
        Ok(Self {
            window,
            local_dim,
            marginals,
            consistency_tol: Tolerances::default().consistency,
            derived: Mutex::default(),
            entropies: Mutex::default(),
        })
    }

    /// Builds one marginal per cluster from `f(anchor, cluster_region)`.
    pub fn from_fn(
        window: Window,
        local_dim: usize,
        mut f: impl FnMut(Vertex, &Region) -> Result<DensityOperator>,
    ) -> Result<Self> {
        let mut marginals = BTreeMap::new();
        for anchor in window.cluster_anchors() {
            let region = cluster_region(anchor, 3, 3)?;
            marginals.insert(anchor, f(anchor, &region)?);
        }
        Self::new(window, local_dim, marginals)
    }

    /// Tolerance used when cross-validating derived marginals.
    pub fn with_consistency_tol(mut self, tol: f64) -> Self {
        self.consistency_tol = tol;
        self.clear_caches();
        self
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn consistency_tol(&self) -> f64 {
        self.consistency_tol
    }

    pub fn marginals(&self) -> &BTreeMap<Vertex, DensityOperator> {
        &self.marginals
    }

    pub fn marginal(&self, anchor: Vertex) -> Option<&DensityOperator> {
        self.marginals.get(&anchor)
    }

    pub fn replace_marginal(&mut self, anchor: Vertex, op: DensityOperator) -> Result<()> {
        let slot = self
            .marginals
            .get_mut(&anchor)
            .ok_or_else(|| Error::Geometry(format!("no cluster at {anchor}")))?;
        if op.region() != slot.region() || op.local_dim() != self.local_dim {
            return Err(Error::Precondition(format!("replacement for {anchor} has the wrong shape")));
        }
        *slot = op;
        self.clear_caches();
        Ok(())
    }

    fn clear_caches(&mut self) {
        self.derived.get_mut().expect("cache lock").clear();
        self.entropies.get_mut().expect("cache lock").clear();
    }

    /// Anchors of the clusters containing `r`, canonically ordered.
    pub fn parents(&self, r: &Region) -> Vec<Vertex> {
        self.marginals
            .iter()
            .filter(|(_, op)| r.is_subset(op.region()))
            .map(|(a, _)| *a)
            .collect()
    }

    /// Reduction of the first containing cluster, cross-checked against every other parent.
    pub fn derived_marginal(&self, r: &Region) -> Result<DensityOperator> {
        if let Some(hit) = self.derived.lock().expect("cache lock").get(r) {
            return Ok(hit.clone());
        }
        let parents = self.parents(r);
        let (first, others) = parents
            .split_first()
            .ok_or_else(|| Error::MissingMarginal(r.clone()))?;
        let reduced = self.marginals[first].partial_trace(r)?;
        for other in others {
            let alt = self.marginals[other].partial_trace(r)?;
            let residual = reduced.trace_distance(&alt)?;
            if residual > self.consistency_tol {
                return Err(Error::Inconsistent {
                    region: r.clone(),
                    residual,
                    tol: self.consistency_tol,
                });
            }
        }
        self.derived
            .lock()
            .expect("cache lock")
            .insert(r.clone(), reduced.clone());
        Ok(reduced)
    }

    /// All 8·(W−2)·(H−2) Markov conditions.
    pub fn conditions(&self) -> Vec<CmCondition> {
        self.window
            .cluster_anchors()
            .into_iter()
            .flat_map(c_m_conditions)
            .collect()
    }

    /// `Σ Tr[ρ_r h_r]` over local terms, each evaluated on a derived marginal.
    pub fn local_energy(&self, terms: &[(Region, Matrix)]) -> Result<f64> {
        terms
            .iter()
            .map(|(r, h)| self.derived_marginal(r)?.expectation(h))
            .sum()
    }
}

impl EntropyProvider for MarginalSet {
    fn entropy_of(&self, region: &Region) -> Result<f64> {
        if region.is_empty() {
            return Ok(0.0);
        }
        if let Some(&s) = self.entropies.lock().expect("cache lock").get(region) {
            return Ok(s);
        }
        let s = self.derived_marginal(region)?.entropy();
        self.entropies.lock().expect("cache lock").insert(region.clone(), s);
        Ok(s)
    }
}

/// CMI of every condition on the stored marginal of its cluster.
pub fn check_markov_conditions(ms: &MarginalSet, tol: f64) -> CheckReport {
    let per_cluster: Vec<Vec<CheckRecord>> = ms
        .marginals
        .par_iter()
        .map(|(&anchor, op)| {
            let mut cache: HashMap<Region, f64> = HashMap::new();
            let mut entropy = |r: &Region| -> Result<f64> {
                if r.is_empty() {
                    return Ok(0.0);
                }
                if let Some(&s) = cache.get(r) {
                    return Ok(s);
                }
                let s = op.entropy_of(r)?;
                cache.insert(r.clone(), s);
                Ok(s)
            };
            c_m_conditions(anchor)
                .into_iter()
                .map(|cond| {
                    let value = (|| -> Result<f64> {
                        let s_ab = entropy(&cond.a.union(&cond.b))?;
                        let s_bc = entropy(&cond.b.union(&cond.c))?;
                        let s_b = entropy(&cond.b)?;
                        let s_abc = entropy(&cond.support())?;
                        Ok((s_ab + s_bc) - s_b - s_abc)
                    })();
                    let id = format!("markov{anchor}#{}", cond.index);
                    let regions = vec![cond.a, cond.b, cond.c];
                    match value {
                        Ok(v) => CheckRecord::at_most(id, CheckKind::Markov, regions, v, tol),
                        Err(e) => CheckRecord::at_most(id, CheckKind::Markov, regions, f64::NAN, tol)
                            .with_note(e.to_string()),
                    }
                })
                .collect()
        })
        .collect();
    per_cluster.into_iter().flatten().collect()
}

/// Trace distance of the two reductions to the overlap, for adjacent cluster pairs
/// (or for every overlapping pair with `all_pairs`).
pub fn check_local_consistency(ms: &MarginalSet, tol: f64, all_pairs: bool) -> CheckReport {
    let anchors: Vec<Vertex> = ms.marginals.keys().copied().collect();
    let mut pairs = Vec::new();
    for (i, &p) in anchors.iter().enumerate() {
        for &q in &anchors[i + 1..] {
            let (dx, dy) = ((q.x - p.x).abs(), (q.y - p.y).abs());
            let keep = if all_pairs {
                dx <= 2 && dy <= 2
            } else {
                dx + dy == 1
            };
            if keep {
                pairs.push((p, q));
            }
        }
    }
    let records: Vec<CheckRecord> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let (rp, rq) = (&ms.marginals[&p], &ms.marginals[&q]);
            let overlap = rp.region().intersection(rq.region());
            let id = format!("consistency{p}~{q}");
            let value = rp
                .partial_trace(&overlap)
                .and_then(|a| a.trace_distance(&rq.partial_trace(&overlap)?));
            match value {
                Ok(v) => CheckRecord::at_most(id, CheckKind::Consistency, vec![overlap], v, tol),
                Err(e) => CheckRecord::at_most(id, CheckKind::Consistency, vec![overlap], f64::NAN, tol)
                    .with_note(e.to_string()),
            }
        })
        .collect();
    records.into_iter().collect()
}

/// A list of local states serving entropies of any region contained in one of them.
#[derive(Debug, Default)]
pub struct LocalStates {
    states: Vec<DensityOperator>,
    entropies: Mutex<HashMap<Region, f64>>,
}

impl LocalStates {
    pub fn new(states: Vec<DensityOperator>) -> Self {
        Self {
            states,
            entropies: Mutex::default(),
        }
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    /// Reduction of the smallest state containing `r`.
    pub fn marginal(&self, r: &Region) -> Result<DensityOperator> {
        self.states
            .iter()
            .filter(|s| r.is_subset(s.region()))
            .min_by_key(|s| s.region().len())
            .ok_or_else(|| Error::MissingMarginal(r.clone()))?
            .partial_trace(r)
    }
}

impl EntropyProvider for LocalStates {
    fn entropy_of(&self, region: &Region) -> Result<f64> {
        if region.is_empty() {
            return Ok(0.0);
        }
        if let Some(&s) = self.entropies.lock().expect("cache lock").get(region) {
            return Ok(s);
        }
        let s = self.marginal(region)?.entropy();
        self.entropies.lock().expect("cache lock").insert(region.clone(), s);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(sites: &[(i64, i64)]) -> Region {
        sites.iter().map(|&(x, y)| Vertex::new(x, y)).collect()
    }

    #[test]
    fn condition_examples() {
        let conds = c_m_conditions(Vertex::new(2, 0));
        assert_eq!(conds.len(), 8);
        assert_eq!((conds[0].a.clone(), conds[0].b.clone(), conds[0].c.clone()), (r(&[(1, 0)]), r(&[(0, 0)]), r(&[(0, 1)])));
        assert_eq!((conds[4].a.clone(), conds[4].b.clone(), conds[4].c.clone()), (r(&[(1, 2)]), r(&[(2, 2)]), r(&[(2, 1)])));
        assert_eq!(conds[7].a, r(&[(2, 2), (1, 2), (0, 2), (2, 1), (2, 0)]));
        assert_eq!(conds[7].b, r(&[(1, 1), (0, 1), (1, 0)]));
        assert_eq!(conds[7].c, r(&[(0, 0)]));
        let cluster = cluster_region(Vertex::new(2, 0), 3, 3).unwrap();
        for c in &conds {
            assert!(c.support().is_subset(&cluster));
        }
    }

    #[test]
    fn conditions_translate_with_anchor() {
        let base = c_m_conditions(Vertex::new(2, 0));
        let moved = c_m_conditions(Vertex::new(5, 3));
        for (p, q) in base.iter().zip(&moved) {
            assert_eq!(p.a.translated(3, 3), q.a);
            assert_eq!(p.b.translated(3, 3), q.b);
            assert_eq!(p.c.translated(3, 3), q.c);
        }
    }

    #[test]
    fn window_geometry() {
        let w = Window::new(4, 4).unwrap();
        assert_eq!(w.cluster_anchors(), vec![Vertex::new(2, 0), Vertex::new(3, 0), Vertex::new(2, 1), Vertex::new(3, 1)]);
        assert!(w.conditions_at(Vertex::new(1, 0)).is_err());
        assert!(w.conditions_at(Vertex::new(3, 1)).is_ok());
        assert!(Window::new(0, 3).is_err());
        assert!(Window::new(2, 2).unwrap().cluster_anchors().is_empty());
    }

    fn product_set(window: Window) -> MarginalSet {
        MarginalSet::from_fn(window, 2, |_, region| {
            let parts: Vec<_> = region
                .iter()
                .map(|v| {
                    let p = 0.1 + 0.05 * ((v.x + 3 * v.y) % 7) as f64;
                    DensityOperator::diagonal(Region::from_sites([v]), 2, &[p, 1.0 - p]).unwrap()
                })
                .collect();
            DensityOperator::product(&parts)
        })
        .unwrap()
    }

    #[test]
    fn product_marginals_pass_all_checks() {
        let ms = product_set(Window::new(4, 3).unwrap());
        let markov = check_markov_conditions(&ms, 1e-12);
        assert_eq!(markov.len(), 16);
        assert!(markov.passed(), "{:?}", markov.max_residual(None));
        let lc = check_local_consistency(&ms, 1e-12, false);
        assert_eq!(lc.len(), 1);
        assert!(lc.passed());
    }

    #[test]
    fn single_cluster_window_has_no_consistency_checks() {
        let ms = product_set(Window::new(3, 3).unwrap());
        let lc = check_local_consistency(&ms, 1e-12, true);
        assert!(lc.is_empty() && lc.passed());
    }

    #[test]
    fn derived_marginal_of_full_cluster_is_stored_marginal() {
        let ms = product_set(Window::new(4, 4).unwrap());
        let cluster = cluster_region(Vertex::new(3, 1), 3, 3).unwrap();
        let d = ms.derived_marginal(&cluster).unwrap();
        assert!(d.matrix().max_abs_diff(ms.marginal(Vertex::new(3, 1)).unwrap().matrix()) == 0.0);
        assert_eq!(ms.parents(&r(&[(2, 1)])).len(), 4);
        assert!(matches!(ms.derived_marginal(&r(&[(0, 0), (3, 3)])), Err(Error::MissingMarginal(_))));
    }

    #[test]
    fn construction_validates_anchors() {
        let w = Window::new(3, 3).unwrap();
        assert!(MarginalSet::new(w, 2, BTreeMap::new()).is_err());
    }

    #[test]
    fn local_states_pick_containing_state() {
        let a = DensityOperator::maximally_mixed(r(&[(0, 0), (1, 0)]), 2).unwrap();
        let ls = LocalStates::new(vec![a]);
        assert!((ls.entropy_of(&r(&[(1, 0)])).unwrap() - 1.0).abs() < 1e-12);
        assert!(ls.entropy_of(&r(&[(2, 0)])).is_err());
    }
}
