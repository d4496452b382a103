//! Benchmark fixtures.

use snakeweaver::oracles::{LineMarkovState, Orientation};
use snakeweaver::{MarginalSet, Window};

/// Marginals of a rotated row-Markov state on a `width`x`height` qubit window.
pub fn row_markov(width: usize, height: usize, seed: u64) -> MarginalSet {
    let window = Window::new(width, height).expect("valid window");
    LineMarkovState::random(window, 2, Orientation::Rows, seed, true)
        .marginal_set()
        .expect("consistent marginals")
}
