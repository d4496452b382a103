//! Verification and reconstruction of 2D lattice states from 3x3-cluster marginals.
//!
//! The pipeline: load fundamental marginals ([`MarginalSet`]), check local consistency and the
//! Markov condition set, build snakes by Petz right-merges, and reconstruct the global
//! maximum-entropy state or evaluate its entropy in closed form.

pub mod ci;
pub mod error;
pub mod format;
pub mod lattice;
pub mod linalg;
pub mod marginals;
pub mod merge;
pub mod operator;
pub mod oracles;
pub mod reconstruct;
pub mod report;
pub mod snakes;

pub use ci::{derive, mono_children, rev_mono, CIStatement, Derivation, DerivationStep, Move};
pub use error::{Error, Result};
pub use format::MarginalFile;
pub use lattice::{cluster_region, neighbors, rotate_pi_local, BlockPath, Cluster, LocalCoord, Region, Vertex};
pub use linalg::{Matrix, C64};
pub use marginals::{c_m_conditions, CmCondition, MarginalSet, Tolerances, Window};
pub use merge::{merge_product, right_merge, MergeExpression};
pub use operator::{med, DensityOperator, EntropyProvider, LogBase};
pub use reconstruct::{max_entropy_formula, reconstruct_global, uniqueness_certificate, vertical_markov_check, ReconstructionResult};
pub use report::{CheckKind, CheckRecord, CheckReport};
pub use snakes::{build_snake, BuildOrder, SnakeSpec, Variant};
