//! Independent test-state generators and verifiers.

pub mod maxent;
pub mod product;
pub mod qmc;
pub mod random;
pub mod row_markov;
pub mod stabilizer;

pub use maxent::{brute_force_maxent, MaxEntOptions, MaxEntSolution};
pub use product::{gen_ghz_row, gen_product, BlockProductState, SiteSpec};
pub use qmc::{gen_markov_pair, gen_qmc_triple, MarkovPair, QmcTriple};
pub use row_markov::{ChainSpec, LineMarkovState, Orientation};
pub use stabilizer::StabilizerState;
