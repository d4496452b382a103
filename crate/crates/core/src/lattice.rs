//! Lattice geometry: vertices, canonically ordered regions, anchored clusters and block paths.
//!
//! Adjacency is the square-lattice rule `|dx| + |dy| = 1`. Sites are addressed by integer
//! coordinates only; any shear used for drawing is applied by [`Vertex::display_position`].

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site. Serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub const fn shifted(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn is_adjacent(self, other: Vertex) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    /// Planar coordinates with `e_y = (-1/2, sqrt(3)/2)`. Display only.
    pub fn display_position(self) -> (f64, f64) {
        let (x, y) = (self.x as f64, self.y as f64);
        (x - 0.5 * y, y * 3f64.sqrt() / 2.0)
    }
}

// Canonical order: row first, then column.
impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<[i64; 2]> for Vertex {
    fn from([x, y]: [i64; 2]) -> Self {
        Self::new(x, y)
    }
}

impl From<Vertex> for [i64; 2] {
    fn from(v: Vertex) -> Self {
        [v.x, v.y]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The four lattice neighbors of `v`, canonically ordered.
pub fn neighbors(v: Vertex) -> Region {
    Region::from_sorted_unchecked(vec![
        v.shifted(0, -1),
        v.shifted(-1, 0),
        v.shifted(1, 0),
        v.shifted(0, 1),
    ])
}

/// A set of distinct sites in canonical order. The order fixes tensor-factor positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Region(Vec<Vertex>);

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let sites = Vec::<Vertex>::deserialize(deserializer)?;
        Region::new(sites).map_err(serde::de::Error::custom)
    }
}

impl Region {
    /// Sorts the sites; fails on duplicates.
    pub fn new(mut sites: Vec<Vertex>) -> Result<Self> {
        sites.sort();
        if let Some(w) = sites.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Geometry(format!("duplicate vertex {} in region", w[0])));
        }
        Ok(Self(sites))
    }

    /// Sorts and deduplicates.
    pub fn from_sites(sites: impl IntoIterator<Item = Vertex>) -> Self {
        let set: BTreeSet<Vertex> = sites.into_iter().collect();
        Self(set.into_iter().collect())
    }

    pub(crate) fn from_sorted_unchecked(sites: Vec<Vertex>) -> Self {
        debug_assert!(sites.windows(2).all(|w| w[0] < w[1]));
        Self(sites)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn sites(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn position(&self, v: Vertex) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.0.iter().all(|&v| !other.contains(v))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::from_sites(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region(self.0.iter().copied().filter(|&v| other.contains(v)).collect())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region(self.0.iter().copied().filter(|&v| !other.contains(v)).collect())
    }

    /// Positions of `sub`'s sites inside `self`, ascending. `None` unless `sub ⊆ self`.
    pub fn positions_of(&self, sub: &Region) -> Option<Vec<usize>> {
        sub.0.iter().map(|&v| self.position(v)).collect()
    }

    /// Sites adjacent to the region but outside it.
    pub fn neighborhood(&self) -> Region {
        Region::from_sites(
            self.0
                .iter()
                .flat_map(|&v| neighbors(v).0)
                .filter(|&u| !self.contains(u)),
        )
    }

    pub fn translated(&self, dx: i64, dy: i64) -> Region {
        Region(self.0.iter().map(|v| v.shifted(dx, dy)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<Vertex> for Region {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        Region::from_sites(iter)
    }
}

/// An `width x height` rectangle addressed by its bottom-right member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cluster {
    pub anchor: Vertex,
    pub width: usize,
    pub height: usize,
}

impl Cluster {
    pub fn new(anchor: Vertex, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "cluster dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { anchor, width, height })
    }

    pub fn region(&self) -> Region {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut sites = Vec::with_capacity(self.width * self.height);
        for j in 0..h {
            for i in 1..=w {
                sites.push(Vertex::new(self.anchor.x - w + i, self.anchor.y + j));
            }
        }
        Region::from_sorted_unchecked(sites)
    }

    /// Lower-left member.
    pub fn origin(&self) -> Vertex {
        self.anchor.shifted(1 - self.width as i64, 0)
    }
}

/// Sites of the `n x m` cluster anchored (bottom-right member) at `anchor`.
pub fn cluster_region(anchor: Vertex, n: i64, m: i64) -> Result<Region> {
    if n < 1 || m < 1 {
        return Err(Error::Geometry(format!(
            "cluster dimensions must be positive, got {n}x{m}"
        )));
    }
    Ok(Cluster::new(anchor, n as usize, m as usize)?.region())
}

/// A coordinate inside a 3x3 cluster, relative to its lower-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalCoord {
    pub x: u8,
    pub y: u8,
}

impl LocalCoord {
    pub fn new(x: u8, y: u8) -> Result<Self> {
        if x > 2 || y > 2 {
            return Err(Error::Geometry(format!(
                "local coordinate ({x},{y}) outside 0..=2"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn all() -> impl Iterator<Item = LocalCoord> {
        (0..3u8).flat_map(|y| (0..3u8).map(move |x| LocalCoord { x, y }))
    }

    /// Absolute position inside the 3x3 cluster anchored at `anchor`.
    pub fn embed(self, anchor: Vertex) -> Vertex {
        Vertex::new(anchor.x - 2 + self.x as i64, anchor.y + self.y as i64)
    }
}

/// Rotation by π about the center of a 3x3 cluster: `(x, y) -> (2-x, 2-y)`.
pub fn rotate_pi_local(p: LocalCoord) -> Result<LocalCoord> {
    if p.x > 2 || p.y > 2 {
        return Err(Error::Geometry(format!(
            "local coordinate ({},{}) outside 0..=2",
            p.x, p.y
        )));
    }
    Ok(LocalCoord { x: 2 - p.x, y: 2 - p.y })
}

/// An ordered sequence of disjoint blocks, each touching the union of its predecessors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockPath {
    blocks: Vec<Region>,
}

impl BlockPath {
    pub fn new(blocks: Vec<Region>) -> Result<Self> {
        let mut seen = Region::empty();
        for (k, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Geometry(format!("block {k} of path is empty")));
            }
            if !block.is_disjoint(&seen) {
                return Err(Error::Geometry(format!("block {k} overlaps earlier blocks")));
            }
            if k > 0 && block.is_disjoint(&seen.neighborhood()) {
                return Err(Error::Geometry(format!(
                    "block {k} is not adjacent to earlier blocks"
                )));
            }
            seen = seen.union(block);
        }
        Ok(Self { blocks })
    }

    /// One singleton block per site, in canonical (row-by-row) order.
    pub fn row_major(region: &Region) -> Result<Self> {
        Self::new(region.iter().map(|v| Region::from_sorted_unchecked(vec![v])).collect())
    }

    /// Columns `x0..=x1` of rows `y0..y0+rows`, left to right.
    pub fn columns(x0: i64, x1: i64, y0: i64, rows: usize) -> Result<Self> {
        Self::new(
            (x0..=x1)
                .map(|x| (0..rows as i64).map(|j| Vertex::new(x, y0 + j)).collect())
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[Region] {
        &self.blocks
    }

    pub fn support(&self) -> Region {
        Region::from_sites(self.blocks.iter().flat_map(|b| b.iter()))
    }

    /// For each block `k`: `(block_k, N(block_k) ∩ (block_1 ∪ ... ∪ block_{k-1}))`.
    pub fn conditioning_pairs(&self) -> Vec<(Region, Region)> {
        let mut seen = Region::empty();
        let mut out = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let cond = block.neighborhood().intersection(&seen);
            out.push((block.clone(), cond));
            seen = seen.union(block);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(sites: &[(i64, i64)]) -> Region {
        Region::new(sites.iter().map(|&(x, y)| Vertex::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn cluster_examples() {
        assert_eq!(cluster_region(Vertex::new(0, 0), 1, 1).unwrap(), r(&[(0, 0)]));
        assert_eq!(
            cluster_region(Vertex::new(0, 0), 2, 2).unwrap().sites(),
            r(&[(-1, 0), (0, 0), (-1, 1), (0, 1)]).sites()
        );
        assert_eq!(
            cluster_region(Vertex::new(2, 0), 3, 3).unwrap(),
            r(&[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (2, 2)])
        );
        assert!(cluster_region(Vertex::new(0, 0), 0, 3).is_err());
        assert!(cluster_region(Vertex::new(0, 0), 2, -1).is_err());
    }

    #[test]
    fn canonical_order_is_rows_first() {
        let region = r(&[(0, 1), (1, 0), (0, 0)]);
        assert_eq!(
            region.sites(),
            &[Vertex::new(0, 0), Vertex::new(1, 0), Vertex::new(0, 1)]
        );
        assert!(Region::new(vec![Vertex::new(0, 0), Vertex::new(0, 0)]).is_err());
    }

    #[test]
    fn neighbor_examples() {
        assert_eq!(neighbors(Vertex::new(0, 0)), r(&[(0, -1), (-1, 0), (1, 0), (0, 1)]));
        assert_eq!(neighbors(Vertex::new(5, 3)), r(&[(5, 2), (4, 3), (6, 3), (5, 4)]));
        assert_eq!(
            r(&[(0, 0), (1, 0)]).neighborhood(),
            r(&[(0, -1), (1, -1), (-1, 0), (2, 0), (0, 1), (1, 1)])
        );
    }

    #[test]
    fn rotation_examples() {
        let rot = |x, y| {
            let p = rotate_pi_local(LocalCoord::new(x, y).unwrap()).unwrap();
            (p.x, p.y)
        };
        assert_eq!(rot(1, 1), (1, 1));
        assert_eq!(rot(0, 0), (2, 2));
        assert_eq!(rot(2, 1), (0, 1));
        assert!(LocalCoord::new(3, 0).is_err());
        assert!(rotate_pi_local(LocalCoord { x: 3, y: 0 }).is_err());
    }

    #[test]
    fn rotation_is_involution() {
        for p in LocalCoord::all() {
            assert_eq!(rotate_pi_local(rotate_pi_local(p).unwrap()).unwrap(), p);
        }
    }

    #[test]
    fn vertex_serializes_as_pair() {
        let v = Vertex::new(3, -2);
        assert_eq!(serde_json::to_string(&v).unwrap(), "[3,-2]");
        let back: Vertex = serde_json::from_str("[3,-2]").unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn block_path_validation() {
        let a = r(&[(0, 0)]);
        let b = r(&[(1, 0), (2, 0)]);
        let far = r(&[(5, 5)]);
        assert!(BlockPath::new(vec![a.clone(), b.clone()]).is_ok());
        assert!(BlockPath::new(vec![a.clone(), far]).is_err());
        assert!(BlockPath::new(vec![b.clone(), b]).is_err());
        let path = BlockPath::columns(0, 2, 0, 2).unwrap();
        let pairs = path.conditioning_pairs();
        assert_eq!(pairs[0].1, Region::empty());
        assert_eq!(pairs[2].1, r(&[(1, 0), (1, 1)]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cluster_contains_anchor(x in -20i64..20, y in -20i64..20, n in 1i64..6, m in 1i64..6) {
                let anchor = Vertex::new(x, y);
                let region = cluster_region(anchor, n, m).unwrap();
                prop_assert!(region.contains(anchor));
                prop_assert_eq!(region.len() as i64, n * m);
                // anchor is the right-most site of the bottom row
                let bottom = region.sites()[0].y;
                let right = region.iter().filter(|v| v.y == bottom).map(|v| v.x).max().unwrap();
                prop_assert_eq!(Vertex::new(right, bottom), anchor);
            }

            #[test]
            fn region_serialization_round_trip(points in proptest::collection::btree_set((-9i64..9, -9i64..9), 0..12)) {
                let region = Region::from_sites(points.iter().map(|&(x, y)| Vertex::new(x, y)));
                let json = serde_json::to_string(&region).unwrap();
                let back: Region = serde_json::from_str(&json).unwrap();
                prop_assert_eq!(back.sites(), region.sites());
                let resorted = Region::new(region.sites().to_vec()).unwrap();
                prop_assert_eq!(resorted, region);
            }
        }
    }
}
