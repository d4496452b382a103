//! Block-product states: independent blocks of sites with exact marginals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, Vertex};
use crate::linalg::{Matrix, C64};
use crate::marginals::{MarginalSet, Window};
use crate::operator::{dense_dim, DensityOperator, EntropyProvider};

/// State of one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteSpec {
    /// `|0><0|`.
    Zero,
    MaximallyMixed,
    /// `(I + r·σ)/2` for a qubit, `|r| <= 1`.
    Bloch([f64; 3]),
    /// Diagonal state with the given populations.
    Diagonal(Vec<f64>),
}

impl SiteSpec {
    pub fn state(&self, v: Vertex, local_dim: usize) -> Result<DensityOperator> {
        let region = Region::from_sites([v]);
        match self {
            SiteSpec::Zero => {
                let mut p = vec![0.0; local_dim];
                p[0] = 1.0;
                DensityOperator::diagonal(region, local_dim, &p)
            }
            SiteSpec::MaximallyMixed => DensityOperator::maximally_mixed(region, local_dim),
            SiteSpec::Diagonal(p) => DensityOperator::diagonal(region, local_dim, p),
            SiteSpec::Bloch([x, y, z]) => {
                if local_dim != 2 {
                    return Err(Error::Precondition("Bloch vectors need qubits".into()));
                }
                if x * x + y * y + z * z > 1.0 + 1e-12 {
                    return Err(Error::Precondition(format!("Bloch vector ({x},{y},{z}) too long")));
                }
                let m = Matrix::from_row_major(
                    2,
                    vec![
                        C64::new((1.0 + z) / 2.0, 0.0),
                        C64::new(x / 2.0, -y / 2.0),
                        C64::new(x / 2.0, y / 2.0),
                        C64::new((1.0 - z) / 2.0, 0.0),
                    ],
                )
                .expect("2x2");
                DensityOperator::new(region, 2, m)
            }
        }
    }
}

/// A tensor product of states on disjoint blocks covering a window.
#[derive(Clone, Debug)]
pub struct BlockProductState {
    window: Window,
    local_dim: usize,
    blocks: Vec<DensityOperator>,
}

impl BlockProductState {
    pub fn new(window: Window, local_dim: usize, blocks: Vec<DensityOperator>) -> Result<Self> {
        let mut covered = Region::empty();
        for b in &blocks {
            if b.local_dim() != local_dim {
                return Err(Error::Precondition("block local dimension mismatch".into()));
            }
            if !b.region().is_disjoint(&covered) {
                return Err(Error::Overlap(format!("block {} overlaps another block", b.region())));
            }
            covered = covered.union(b.region());
        }
        if covered != window.region() {
            return Err(Error::Precondition("blocks must cover the window exactly".into()));
        }
        Ok(Self {
            window,
            local_dim,
            blocks,
        })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn blocks(&self) -> &[DensityOperator] {
        &self.blocks
    }

    pub fn marginal(&self, r: &Region) -> Result<DensityOperator> {
        if !r.is_subset(&self.window.region()) {
            return Err(Error::NotContained {
                sub: r.clone(),
                sup: self.window.region(),
            });
        }
        let parts = self
            .blocks
            .iter()
            .filter_map(|b| {
                let part = b.region().intersection(r);
                (!part.is_empty()).then(|| b.partial_trace(&part))
            })
            .collect::<Result<Vec<_>>>()?;
        DensityOperator::product(&parts)
    }

    pub fn global(&self) -> Result<DensityOperator> {
        dense_dim(self.local_dim, self.window.num_sites())?;
        self.marginal(&self.window.region())
    }

    pub fn marginal_set(&self) -> Result<MarginalSet> {
        MarginalSet::from_fn(self.window, self.local_dim, |_, region| self.marginal(region))
    }
}

impl EntropyProvider for BlockProductState {
    fn entropy_of(&self, region: &Region) -> Result<f64> {
        self.blocks
            .iter()
            .map(|b| b.entropy_of(&b.region().intersection(region)))
            .sum()
    }
}

/// One block per site.
pub fn gen_product(
    window: Window,
    local_dim: usize,
    spec: impl Fn(Vertex) -> SiteSpec,
) -> Result<BlockProductState> {
    let blocks = window
        .region()
        .iter()
        .map(|v| spec(v).state(v, local_dim))
        .collect::<Result<Vec<_>>>()?;
    BlockProductState::new(window, local_dim, blocks)
}

/// `(|000> + |111>)/√2` on sites `x0..x0+3` of row `row`, `|0>` everywhere else.
pub fn gen_ghz_row(window: Window, row: i64, x0: i64) -> Result<BlockProductState> {
    let ghz_sites: Region = (x0..x0 + 3).map(|x| Vertex::new(x, row)).collect();
    if !ghz_sites.iter().all(|v| window.contains(v)) {
        return Err(Error::Geometry(format!("GHZ sites {ghz_sites} leave the window")));
    }
    let mut psi = vec![C64::new(0.0, 0.0); 8];
    psi[0] = C64::new(1.0, 0.0);
    psi[7] = C64::new(1.0, 0.0);
    let mut blocks = vec![DensityOperator::pure(ghz_sites.clone(), 2, &psi)?];
    for v in window.region().difference(&ghz_sites).iter() {
        blocks.push(SiteSpec::Zero.state(v, 2)?);
    }
    BlockProductState::new(window, 2, blocks)
}
