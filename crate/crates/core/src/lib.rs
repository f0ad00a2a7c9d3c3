//! Optimal unambiguous discrimination of pure qudit ensembles.
//!
//! Given linearly independent pure states with arbitrary priors, this crate
//!
//! - computes the optimal conclusive weights, either in closed form
//!   ([`analytic`]) or with a log-det barrier method ([`solver`]),
//! - assembles and validates the resulting POVM ([`solver`]),
//! - realizes the POVM as an explicit projective measurement on an enlarged
//!   space, including a minimal-extension-dimension search ([`naimark`]),
//! - provides the minimum-error discrimination baseline ([`mesd`]), and
//! - simulates photon-counting statistics, Monte Carlo error bars, and MUB
//!   crosstalk/visibility checks ([`photonsim`]).
//!
//! All routines are pure functions of immutable inputs; anything randomized
//! takes an explicit seed and is reproducible.

pub mod analytic;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod mesd;
pub mod naimark;
pub mod photonsim;
pub mod powell;
pub mod solver;

pub use analytic::{AlphaVector, SurfaceCandidate, SurfaceKind, SurfaceSolutions};
pub use ensemble::{
    dual_basis, gram_data, lg_triple, DualBasis, GramData, LgTripleParams, QutritOverlaps,
    StateEnsemble,
};
pub use error::{Error, Result};
pub use mesd::{helstrom_2, mesd_bound, MesdResult};
pub use naimark::{
    extend_2, extend_3_closed_form, extend_general, min_extension_dim, ExtendOptions,
    Extension3Coefficients, ExtensionCoefficients, MinExtensionReport, ProjectiveMeasurement,
};
pub use photonsim::{
    crosstalk_visibility, monte_carlo_sweep, mub4_bases, outcome_probs, simulate_counts,
    CountMode, CountTable, CrosstalkReport, OutcomeDistribution, SweepConfig, SweepPoint,
};
pub use solver::{build_povm, kkt_check, solve_optimal_alpha, SolverReport, UsdPovm};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

// Re-exported so downstream crates can name the vector/matrix types.
pub use nalgebra;
