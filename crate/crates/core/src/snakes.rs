//! Level-1/2/3 snakes: merge products of 2×k cluster marginals stepping right, together with the
//! flat and hooked ways of building the next level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cluster_region, BlockPath, Region, Vertex};
use crate::marginals::MarginalSet;
use crate::merge::{merge_product, right_merge, MergeExpression};
use crate::operator::{dense_dim, med, DensityOperator};
use crate::report::{CheckKind, CheckRecord, CheckReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Plain,
    FlatUp,
    FlatDown,
    HookedUp,
    HookedDown,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Plain,
        Variant::FlatUp,
        Variant::FlatDown,
        Variant::HookedUp,
        Variant::HookedDown,
    ];
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "flat_up" | "flat-up" => Ok(Variant::FlatUp),
            "flat_down" | "flat-down" => Ok(Variant::FlatDown),
            "hooked_up" | "hooked-up" => Ok(Variant::HookedUp),
            "hooked_down" | "hooked-down" => Ok(Variant::HookedDown),
            other => Err(Error::Precondition(format!("unknown snake variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildOrder {
    #[default]
    Forward,
    Reversed,
}

/// A snake of `level` rows from `v` (left end of the bottom row) to `u` (right end).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SnakeSpec {
    pub level: u8,
    pub v: Vertex,
    pub u: Vertex,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub order: BuildOrder,
}

impl SnakeSpec {
    pub fn new(level: u8, v: Vertex, u: Vertex) -> Result<Self> {
        Self::with_variant(level, v, u, Variant::Plain)
    }

    pub fn with_variant(level: u8, v: Vertex, u: Vertex, variant: Variant) -> Result<Self> {
        let spec = Self {
            level,
            v,
            u,
            variant,
            order: BuildOrder::Forward,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn reversed(mut self) -> Result<Self> {
        self.order = BuildOrder::Reversed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.level) {
            return Err(Error::Geometry(format!("snake level {} not in 1..=3", self.level)));
        }
        if self.v.y != self.u.y || self.u.x - self.v.x < 2 {
            return Err(Error::Geometry(format!(
                "snake ends {} and {} must share a row with at least one site between them",
                self.v, self.u
            )));
        }
        if self.variant != Variant::Plain && self.level == 1 {
            return Err(Error::Geometry("flat and hooked variants need level 2 or 3".into()));
        }
        if self.order == BuildOrder::Reversed && self.variant != Variant::Plain {
            return Err(Error::Geometry("reversed builds are defined for plain snakes only".into()));
        }
        Ok(())
    }

    /// Number of merge steps along the row.
    pub fn span(&self) -> i64 {
        self.u.x - self.v.x
    }

    /// The rectangle covered by the snake.
    pub fn support(&self) -> Region {
        let mut sites = Vec::new();
        for y in self.v.y..self.v.y + self.level as i64 {
            for x in self.v.x..=self.u.x {
                sites.push(Vertex::new(x, y));
            }
        }
        Region::from_sites(sites)
    }

    /// Regions of the merge factors, in build order.
    pub fn factor_regions(&self) -> Result<Vec<Region>> {
        self.validate()?;
        let (v, u, n) = (self.v, self.u, self.span());
        let k = self.level as i64;
        let rect = |anchor: Vertex, h: i64| cluster_region(anchor, 2, h).expect("positive size");
        let plain = |v: Vertex, level: i64| -> Vec<Region> { (1..=n).map(|i| rect(v.shifted(i, 0), level)).collect() };
        let mut out = match (self.level, self.variant) {
            (_, Variant::Plain) => plain(v, k),
            (2, Variant::FlatUp) => {
                let mut f = plain(v, 1);
                f.extend((1..=n).map(|i| rect(v.shifted(i, 0), 2)));
                f
            }
            (2, Variant::FlatDown) => {
                let mut f = plain(v.shifted(0, 1), 1);
                f.extend((0..n).map(|i| rect(u.shifted(-i, 0), 2)));
                f
            }
            (2, Variant::HookedUp) => hooked_up_2(v, n),
            (2, Variant::HookedDown) => {
                let flip = |p: Vertex| Vertex::new(v.x + u.x - p.x, 2 * v.y + 1 - p.y);
                hooked_up_2(v, n).into_iter().map(|r| r.iter().map(flip).collect()).collect()
            }
            (3, Variant::FlatUp) => {
                let mut f = vec![merged_region(&plain(v, 2))];
                f.extend((1..=n).map(|i| rect(v.shifted(i, 1), 2)));
                f
            }
            (3, Variant::FlatDown) => {
                let mut f = vec![merged_region(&plain(v.shifted(0, 1), 2))];
                f.extend((0..n).map(|i| rect(u.shifted(-i, 0), 2)));
                f
            }
            (3, Variant::HookedUp) => hooked_up_3(v, n),
            (3, Variant::HookedDown) => {
                let flip = |p: Vertex| Vertex::new(v.x + u.x - p.x, 2 * v.y + 2 - p.y);
                hooked_up_3(v, n).into_iter().map(|r| r.iter().map(flip).collect()).collect()
            }
            _ => unreachable!("validated"),
        };
        if self.order == BuildOrder::Reversed {
            out.reverse();
        }
        Ok(out)
    }
}

fn merged_region(parts: &[Region]) -> Region {
    parts.iter().fold(Region::empty(), |acc, r| acc.union(r))
}

fn hooked_up_2(v: Vertex, n: i64) -> Vec<Region> {
    let rect = |anchor: Vertex, h| cluster_region(anchor, 2, h).expect("positive size");
    let mut f = vec![Region::from_sites([v, v.shifted(1, 0), v.shifted(0, 1)])];
    f.extend((2..=n).map(|i| rect(v.shifted(i, 0), 1)));
    f.extend((1..=n).map(|i| rect(v.shifted(i, 0), 2)));
    f
}

fn hooked_up_3(v: Vertex, n: i64) -> Vec<Region> {
    let rect = |anchor: Vertex, h| cluster_region(anchor, 2, h).expect("positive size");
    let mut f = vec![rect(v.shifted(1, 0), 2).union(&Region::from_sites([v.shifted(0, 2)]))];
    f.extend((2..=n).map(|i| rect(v.shifted(i, 0), 2)));
    f.extend((1..=n).map(|i| rect(v.shifted(i, 1), 2)));
    f
}

fn check_inside(ms: &MarginalSet, spec: &SnakeSpec) -> Result<()> {
    let support = spec.support();
    if let Some(out) = support.iter().find(|&p| !ms.window().contains(p)) {
        return Err(Error::Geometry(format!("snake site {out} lies outside the window")));
    }
    dense_dim(ms.local_dim(), support.len())?;
    Ok(())
}

/// The derived marginals the snake is merged from, in build order.
///
/// A level-3 flat diagram starts from the level-2 snake, which is built here.
pub fn snake_factors(ms: &MarginalSet, spec: &SnakeSpec) -> Result<Vec<DensityOperator>> {
    check_inside(ms, spec)?;
    let regions = spec.factor_regions()?;
    let mut out = Vec::with_capacity(regions.len());
    for (i, r) in regions.iter().enumerate() {
        let base_is_snake = i == 0
            && spec.level == 3
            && matches!(spec.variant, Variant::FlatUp | Variant::FlatDown);
        if base_is_snake {
            let lift = if spec.variant == Variant::FlatDown { 1 } else { 0 };
            let base = SnakeSpec::new(2, spec.v.shifted(0, lift), spec.u.shifted(0, lift))?;
            out.push(build_snake(ms, &base)?);
        } else {
            out.push(ms.derived_marginal(r)?);
        }
    }
    Ok(out)
}

pub fn build_snake(ms: &MarginalSet, spec: &SnakeSpec) -> Result<DensityOperator> {
    let mut factors = snake_factors(ms, spec)?;
    let initial = factors.remove(0);
    merge_product(&MergeExpression::new(initial, factors))
}

/// Consecutive factors agree on their overlap, their joint marginal is Markov across it and equals
/// their merge; non-consecutive factors are disjoint.
pub fn verify_is_snake(ms: &MarginalSet, spec: &SnakeSpec, tol: f64) -> Result<CheckReport> {
    let factors = snake_factors(ms, spec)?;
    let mut report = CheckReport::new();
    for (i, pair) in factors.windows(2).enumerate() {
        let (left, right) = (&pair[0], &pair[1]);
        let overlap = left.region().intersection(right.region());
        let union = left.region().union(right.region());
        let tag = format!("snake{}[{i},{}]", spec.v, i + 1);
        let consistency = left.partial_trace(&overlap)?.trace_distance(&right.partial_trace(&overlap)?)?;
        report.push(CheckRecord::at_most(
            format!("{tag}:overlap"),
            CheckKind::Consistency,
            vec![overlap.clone()],
            consistency,
            tol,
        ));
        let joint = ms.derived_marginal(&union)?;
        let (a, c) = (left.region().difference(&overlap), right.region().difference(&overlap));
        report.push(CheckRecord::at_most(
            format!("{tag}:markov"),
            CheckKind::Markov,
            vec![a.clone(), overlap.clone(), c.clone()],
            joint.cmi(&a, &overlap, &c)?,
            tol,
        ));
        let merged = right_merge(left, right)?;
        report.push(CheckRecord::at_most(
            format!("{tag}:merge"),
            CheckKind::Equality,
            vec![union],
            merged.trace_distance(&joint)?,
            tol,
        ));
    }
    for i in 0..factors.len() {
        for j in i + 2..factors.len() {
            let shared = factors[i].region().intersection(factors[j].region());
            report.push(CheckRecord::at_most(
                format!("snake{}[{i},{j}]:disjoint", spec.v),
                CheckKind::Disjointness,
                vec![shared.clone()],
                shared.len() as f64,
                0.0,
            ));
        }
    }
    Ok(report)
}

/// `snake(v,t)` against `snake(v,u) ⊲ snake(u,t)` and `snake(u,t) ⊲ snake(v,u)`.
pub fn split_check(ms: &MarginalSet, level: u8, v: Vertex, u: Vertex, t: Vertex, tol: f64) -> Result<CheckReport> {
    if v.y != u.y || u.y != t.y || u.x - v.x < 2 || t.x - u.x < 2 {
        return Err(Error::Geometry(format!("split points {v}, {u}, {t} are not spaced along one row")));
    }
    let whole = build_snake(ms, &SnakeSpec::new(level, v, t)?)?;
    let left = build_snake(ms, &SnakeSpec::new(level, v, u)?)?;
    let right = build_snake(ms, &SnakeSpec::new(level, u, t)?)?;
    let mut report = CheckReport::new();
    for (name, merged) in [("forward", right_merge(&left, &right)?), ("backward", right_merge(&right, &left)?)] {
        report.push(CheckRecord::at_most(
            format!("split{v}{u}{t}:{name}"),
            CheckKind::Equality,
            vec![whole.region().clone()],
            whole.trace_distance(&merged)?,
            tol,
        ));
    }
    Ok(report)
}

/// Column-by-column entropy decomposition of the snake's support, from derived marginals.
pub fn snake_entropy_med(ms: &MarginalSet, spec: &SnakeSpec) -> Result<f64> {
    check_inside(ms, spec)?;
    med(ms, &BlockPath::columns(spec.v.x, spec.u.x, spec.v.y, spec.level as usize)?)
}

/// The top row of the level-2 snake at `(v,u)`, and the bottom row of the one at `(v−e_y, u−e_y)`,
/// both traced out, against the level-1 snake at `(v,u)`.
pub fn level_drop_check(ms: &MarginalSet, v: Vertex, u: Vertex, tol: f64) -> Result<CheckReport> {
    let one = build_snake(ms, &SnakeSpec::new(1, v, u)?)?;
    let mut report = CheckReport::new();
    let spec_up = SnakeSpec::new(2, v, u)?;
    if spec_up.support().iter().all(|p| ms.window().contains(p)) {
        let two = build_snake(ms, &spec_up)?;
        report.push(CheckRecord::at_most(
            format!("drop{v}{u}:top"),
            CheckKind::Equality,
            vec![one.region().clone()],
            two.partial_trace(one.region())?.trace_distance(&one)?,
            tol,
        ));
    }
    let spec_down = SnakeSpec::new(2, v.shifted(0, -1), u.shifted(0, -1))?;
    if spec_down.support().iter().all(|p| ms.window().contains(p)) {
        let two = build_snake(ms, &spec_down)?;
        report.push(CheckRecord::at_most(
            format!("drop{v}{u}:bottom"),
            CheckKind::Equality,
            vec![one.region().clone()],
            two.partial_trace(one.region())?.trace_distance(&one)?,
            tol,
        ));
    }
    if report.is_empty() {
        return Err(Error::Geometry(format!("no level-2 snake around {v}..{u} fits the window")));
    }
    Ok(report)
}

/// Every variant and the reversed plain build against the forward plain snake.
pub fn variant_agreement(ms: &MarginalSet, level: u8, v: Vertex, u: Vertex, tol: f64) -> Result<CheckReport> {
    let plain = build_snake(ms, &SnakeSpec::new(level, v, u)?)?;
    let mut others = vec![("reversed".to_string(), SnakeSpec::new(level, v, u)?.reversed()?)];
    if level > 1 {
        for variant in &Variant::ALL[1..] {
            others.push((format!("{variant:?}"), SnakeSpec::with_variant(level, v, u, *variant)?));
        }
    }
    let mut report = CheckReport::new();
    for (name, spec) in others {
        let state = build_snake(ms, &spec)?;
        report.push(CheckRecord::at_most(
            format!("level{level}{v}{u}:plain~{name}"),
            CheckKind::Equality,
            vec![plain.region().clone()],
            plain.trace_distance(&state)?,
            tol,
        ));
    }
    Ok(report)
}

/// Reductions of `state` against the derived marginals of every cluster piece inside its support.
pub fn marginal_fidelity(ms: &MarginalSet, state: &DensityOperator, tol: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new();
    for (&anchor, op) in ms.marginals() {
        let piece = op.region().intersection(state.region());
        if piece.is_empty() {
            continue;
        }
        let expected = ms.derived_marginal(&piece)?;
        report.push(CheckRecord::at_most(
            format!("fidelity{anchor}"),
            CheckKind::Fidelity,
            vec![piece.clone()],
            state.partial_trace(&piece)?.trace_distance(&expected)?,
            tol,
        ));
    }
    Ok(report)
}

/// Entropy of the built snake, for comparison with [`snake_entropy_med`].
pub fn snake_entropy(ms: &MarginalSet, spec: &SnakeSpec) -> Result<f64> {
    let state = build_snake(ms, spec)?;
    Ok(state.entropy())
}
