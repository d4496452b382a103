use thiserror::Error;

use crate::lattice::Region;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("region {sub} is not contained in {sup}")]
    NotContained { sub: Region, sup: Region },

    #[error("regions are not pairwise disjoint: {0}")]
    Overlap(String),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("dimension {dim} exceeds the dense limit of {limit}")]
    DimensionGuard { dim: u128, limit: usize },

    #[error("right-merge needs overlapping supports, got {left} and {right}")]
    EmptyOverlap { left: Region, right: Region },

    #[error("merge inputs have no common support on {0}")]
    ZeroSupport(Region),

    #[error("no fundamental marginal contains {0}")]
    MissingMarginal(Region),

    #[error("marginals disagree on {region}: trace distance {residual:.3e} exceeds {tol:.1e}")]
    Inconsistent { region: Region, residual: f64, tol: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("marginal file: {0}")]
    Format(String),

    #[error("no convergence after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
