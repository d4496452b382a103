//! Conditional-independence statements `I(A:C|B) = 0` and the monotonicity calculus.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LocalCoord, Region, Vertex};
use crate::marginals::c_m_conditions;
use crate::operator::EntropyProvider;
use crate::report::{CheckKind, CheckRecord, CheckReport};

pub const DEFAULT_DEPTH: usize = 8;
const MAX_STATEMENTS: usize = 2_000_000;

/// `I(A:C|B) = 0`, stored with the lexicographically smaller of `A`, `C` first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CIStatement {
    a: Region,
    b: Region,
    c: Region,
}

#[derive(Deserialize)]
struct RawStatement {
    a: Region,
    b: Region,
    c: Region,
}

impl<'de> Deserialize<'de> for CIStatement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawStatement::deserialize(d)?;
        CIStatement::new(raw.a, raw.b, raw.c).map_err(serde::de::Error::custom)
    }
}

impl CIStatement {
    pub fn new(a: Region, b: Region, c: Region) -> Result<Self> {
        if a.is_empty() || c.is_empty() {
            return Err(Error::Precondition("A and C must be nonempty".into()));
        }
        if !a.is_disjoint(&b) || !a.is_disjoint(&c) || !b.is_disjoint(&c) {
            return Err(Error::Overlap(format!("A={a} B={b} C={c}")));
        }
        let (a, c) = if c.sites() < a.sites() { (c, a) } else { (a, c) };
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &Region {
        &self.a
    }

    pub fn b(&self) -> &Region {
        &self.b
    }

    pub fn c(&self) -> &Region {
        &self.c
    }

    pub fn support(&self) -> Region {
        self.a.union(&self.b).union(&self.c)
    }

    /// `I(A:C|B)` evaluated on `provider`.
    pub fn cmi<P: EntropyProvider + ?Sized>(&self, provider: &P) -> Result<f64> {
        provider.cmi(&self.a, &self.b, &self.c)
    }
}

impl fmt::Display for CIStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I({} : {} | {})", self.a, self.c, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Move {
    Mono,
    #[serde(rename = "revmono")]
    RevMono,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationStep {
    #[serde(rename = "move")]
    pub mv: Move,
    pub inputs: Vec<CIStatement>,
    pub output: CIStatement,
}

/// Moves in dependency order; empty when the target is an axiom.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Derivation {
    pub steps: Vec<DerivationStep>,
}

impl Derivation {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// All single monotonicity moves: delete, or absorb into `B`, a nonempty proper subset of `A` or `C`.
pub fn mono_children(s: &CIStatement) -> Vec<CIStatement> {
    let universe = Universe::new(&[s]).expect("a statement spans at most 64 sites");
    let m = universe.encode(s);
    let mut out: Vec<CIStatement> = mono_masks(m).into_iter().map(|k| universe.decode(k)).collect();
    out.sort();
    out.dedup();
    out
}

/// Reverse monotonicity: from `I(X:Y₁|B₁)` and `I(X:Y₂|B₂)` with `B₂ ∪ Y₂ = B₁`,
/// conclude `I(X : Y₁ ∪ Y₂ | B₁ ∩ B₂)`. Both roles and both orientations are tried.
pub fn rev_mono(s1: &CIStatement, s2: &CIStatement) -> Option<CIStatement> {
    let universe = Universe::new(&[s1, s2]).ok()?;
    let (m1, m2) = (universe.encode(s1), universe.encode(s2));
    rev_mono_masks(m1, m2)
        .or_else(|| rev_mono_masks(m2, m1))
        .map(|k| universe.decode(k))
}

type Mask = u64;

/// `(a, b, c)` with `a <= c` numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Key(Mask, Mask, Mask);

impl Key {
    fn new(x: Mask, b: Mask, y: Mask) -> Self {
        if x <= y {
            Key(x, b, y)
        } else {
            Key(y, b, x)
        }
    }

    fn orientations(self) -> [(Mask, Mask, Mask); 2] {
        [(self.0, self.1, self.2), (self.2, self.1, self.0)]
    }
}

fn submasks(x: Mask) -> impl Iterator<Item = Mask> {
    let mut sub = x;
    std::iter::from_fn(move || {
        sub = sub.wrapping_sub(1) & x;
        (sub != 0).then_some(sub)
    })
}

fn mono_masks(k: Key) -> Vec<Key> {
    let mut out = Vec::new();
    for (x, b, y) in k.orientations() {
        for d in submasks(x) {
            if d == x {
                continue;
            }
            out.push(Key::new(x & !d, b, y));
            out.push(Key::new(x & !d, b | d, y));
        }
    }
    out
}

fn rev_mono_masks(s1: Key, s2: Key) -> Option<Key> {
    for (x1, b1, y1) in s1.orientations() {
        for (x2, b2, y2) in s2.orientations() {
            if x1 == x2 && b2 | y2 == b1 && b2 & y2 == 0 {
                return Some(Key::new(x1, b1 & b2, y1 | y2));
            }
        }
    }
    None
}

struct Universe {
    sites: Vec<Vertex>,
}

impl Universe {
    fn new(statements: &[&CIStatement]) -> Result<Self> {
        let all = Region::from_sites(statements.iter().flat_map(|s| s.support().iter().collect::<Vec<_>>()));
        if all.len() > 64 {
            return Err(Error::Precondition(format!(
                "statements span {} sites, at most 64 are supported",
                all.len()
            )));
        }
        Ok(Self {
            sites: all.sites().to_vec(),
        })
    }

    fn mask(&self, r: &Region) -> Mask {
        r.iter().fold(0, |m, v| {
            m | 1 << self.sites.binary_search(&v).expect("site in universe")
        })
    }

    fn region(&self, m: Mask) -> Region {
        Region::from_sites((0..self.sites.len()).filter(|i| m >> i & 1 == 1).map(|i| self.sites[i]))
    }

    fn encode(&self, s: &CIStatement) -> Key {
        Key::new(self.mask(&s.a), self.mask(&s.b), self.mask(&s.c))
    }

    fn decode(&self, k: Key) -> CIStatement {
        CIStatement::new(self.region(k.0), self.region(k.1), self.region(k.2)).expect("valid by construction")
    }
}

#[derive(Clone, Debug)]
enum Origin {
    Axiom,
    Mono(usize),
    RevMono(usize, usize),
}

struct Node {
    key: Key,
    depth: usize,
    origin: Origin,
}

/// Breadth-first closure under both moves, indexed for reverse-monotonicity partner lookup.
struct Engine {
    universe: Universe,
    nodes: Vec<Node>,
    index: HashMap<Key, usize>,
    /// `(X, B) → [(node, Y)]`.
    by_xb: HashMap<(Mask, Mask), Vec<(usize, Mask)>>,
    /// `(X, B ∪ Y) → [(node, Y, B)]`.
    by_xu: HashMap<(Mask, Mask), Vec<(usize, Mask, Mask)>>,
}

impl Engine {
    fn new(axioms: &[CIStatement], extra: &[&CIStatement]) -> Result<Self> {
        let refs: Vec<&CIStatement> = axioms.iter().chain(extra.iter().copied()).collect();
        let mut engine = Self {
            universe: Universe::new(&refs)?,
            nodes: Vec::new(),
            index: HashMap::new(),
            by_xb: HashMap::new(),
            by_xu: HashMap::new(),
        };
        for a in axioms {
            let key = engine.universe.encode(a);
            engine.insert(key, 0, Origin::Axiom);
        }
        Ok(engine)
    }

    fn insert(&mut self, key: Key, depth: usize, origin: Origin) -> Option<usize> {
        if self.index.contains_key(&key) {
            return None;
        }
        let id = self.nodes.len();
        self.nodes.push(Node { key, depth, origin });
        self.index.insert(key, id);
        let orientations = key.orientations();
        let count = if key.0 == key.2 { 1 } else { 2 };
        for &(x, b, y) in &orientations[..count] {
            self.by_xb.entry((x, b)).or_default().push((id, y));
            self.by_xu.entry((x, b | y)).or_default().push((id, y, b));
        }
        Some(id)
    }

    /// Expands layer by layer until `stop` reports true on an inserted key or `depth` is reached.
    fn run(&mut self, depth: usize, mut stop: impl FnMut(Key) -> bool) -> Option<usize> {
        if let Some(hit) = self.nodes.iter().position(|n| stop(n.key)) {
            return Some(hit);
        }
        let mut cursor = 0;
        while cursor < self.nodes.len() {
            let id = cursor;
            cursor += 1;
            let (key, d) = (self.nodes[id].key, self.nodes[id].depth);
            if d >= depth {
                continue;
            }
            let mut produced: Vec<(Key, Origin)> = mono_masks(key).into_iter().map(|k| (k, Origin::Mono(id))).collect();
            let orientations = key.orientations();
            let count = if key.0 == key.2 { 1 } else { 2 };
            for &(x, b, y) in &orientations[..count] {
                // as the first input: partners with B₂ ∪ Y₂ = B
                if let Some(partners) = self.by_xu.get(&(x, b)) {
                    for &(other, y2, b2) in partners {
                        produced.push((Key::new(x, b & b2, y | y2), Origin::RevMono(id, other)));
                    }
                }
                // as the second input: partners with B₁ = B ∪ Y
                if let Some(partners) = self.by_xb.get(&(x, b | y)) {
                    for &(other, y1) in partners {
                        produced.push((Key::new(x, b, y | y1), Origin::RevMono(other, id)));
                    }
                }
            }
            for (k, origin) in produced {
                if let Some(new) = self.insert(k, d + 1, origin) {
                    if stop(k) {
                        return Some(new);
                    }
                }
                if self.nodes.len() >= MAX_STATEMENTS {
                    log::warn!("closure stopped at {MAX_STATEMENTS} statements");
                    return None;
                }
            }
        }
        None
    }

    fn trace(&self, target: usize) -> Derivation {
        let mut order = Vec::new();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![(target, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
                continue;
            }
            if seen[id] {
                continue;
            }
            seen[id] = true;
            stack.push((id, true));
            match self.nodes[id].origin {
                Origin::Axiom => {}
                Origin::Mono(p) => stack.push((p, false)),
                Origin::RevMono(p, q) => {
                    stack.push((q, false));
                    stack.push((p, false));
                }
            }
        }
        let steps = order
            .into_iter()
            .filter_map(|id| {
                let output = self.universe.decode(self.nodes[id].key);
                match self.nodes[id].origin {
                    Origin::Axiom => None,
                    Origin::Mono(p) => Some(DerivationStep {
                        mv: Move::Mono,
                        inputs: vec![self.universe.decode(self.nodes[p].key)],
                        output,
                    }),
                    Origin::RevMono(p, q) => Some(DerivationStep {
                        mv: Move::RevMono,
                        inputs: vec![
                            self.universe.decode(self.nodes[p].key),
                            self.universe.decode(self.nodes[q].key),
                        ],
                        output,
                    }),
                }
            })
            .collect();
        Derivation { steps }
    }
}

/// Searches for `target` in the closure of `axioms` under both moves, up to `depth` moves deep.
pub fn derive(axioms: &[CIStatement], target: &CIStatement, depth: usize) -> Result<Option<Derivation>> {
    if axioms.is_empty() {
        return Ok(None);
    }
    let mut engine = Engine::new(axioms, &[target])?;
    let goal = engine.universe.encode(target);
    Ok(engine.run(depth, |k| k == goal).map(|id| engine.trace(id)))
}

/// Every statement derivable from `axioms` within `depth` moves (axioms included).
pub fn closure(axioms: &[CIStatement], depth: usize) -> Result<Vec<CIStatement>> {
    let mut engine = Engine::new(axioms, &[])?;
    engine.run(depth, |_| false);
    Ok(engine.nodes.iter().map(|n| engine.universe.decode(n.key)).collect())
}

/// The eight Markov conditions of the cluster at `anchor` as statements.
pub fn cluster_axioms(anchor: Vertex) -> Vec<CIStatement> {
    c_m_conditions(anchor)
        .into_iter()
        .map(|c| CIStatement::new(c.a, c.b, c.c).expect("conditions are valid statements"))
        .collect()
}

/// Conditions of every cluster overlapping the one at `anchor`, restricted to it.
///
/// A condition whose `B` lies inside the cluster is cut down by deleting the parts of `A` and `C`
/// outside; the rest are dropped. Every statement follows from the full condition set by
/// monotonicity.
pub fn localized_axioms(anchor: Vertex) -> Vec<CIStatement> {
    let cluster: Region = LocalCoord::all().map(|p| p.embed(anchor)).collect();
    let mut out = Vec::new();
    for dy in -2..=2 {
        for dx in -2..=2 {
            for c in c_m_conditions(anchor.shifted(dx, dy)) {
                if !c.b.is_subset(&cluster) {
                    continue;
                }
                let (a, cc) = (c.a.intersection(&cluster), c.c.intersection(&cluster));
                if let Ok(s) = CIStatement::new(a, c.b, cc) {
                    if !out.contains(&s) {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

/// `I((2,1) : (0,1) | (1,1))` in the local frame of the cluster at `anchor`.
pub fn level1_snake_target(anchor: Vertex) -> CIStatement {
    let at = |x, y| Region::from_sites([LocalCoord { x, y }.embed(anchor)]);
    CIStatement::new(at(2, 1), at(1, 1), at(0, 1)).expect("valid statement")
}

/// Evaluates every statement on `provider`, one record per statement.
pub fn check_statements<P: EntropyProvider + Sync + ?Sized>(
    provider: &P,
    statements: &[CIStatement],
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new();
    for s in statements {
        let cmi = s.cmi(provider)?;
        report.push(CheckRecord::at_most(
            format!("ci{s}"),
            CheckKind::Markov,
            vec![s.a.clone(), s.b.clone(), s.c.clone()],
            cmi,
            tol,
        ));
    }
    Ok(report)
}
