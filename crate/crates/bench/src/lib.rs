//! Benchmark fixtures shared by the criterion targets.

use qusd::ensemble::{lg_triple, overlap_pattern_gram, LgTripleParams, StateEnsemble};
use std::f64::consts::PI;

/// The symmetric Laguerre-Gaussian triple with equal priors.
pub fn symmetric_triple() -> StateEnsemble {
    lg_triple(
        &LgTripleParams { xi: PI / 3.0, theta: 2.0 * PI / 3.0, phi: 2.0 * PI / 3.0 },
        [1.0 / 3.0; 3],
    )
    .expect("valid fixture")
}

/// Pattern ensemble of the dimension-growth study.
pub fn pattern_ensemble(d: usize) -> StateEnsemble {
    let gram = overlap_pattern_gram(d, 0.3, 0.1);
    StateEnsemble::from_gram(&gram, vec![1.0 / d as f64; d]).expect("valid fixture")
}
