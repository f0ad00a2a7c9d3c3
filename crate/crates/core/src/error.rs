//! Error type shared by all discrimination routines.

use thiserror::Error;

/// Errors produced while validating ensembles, solving for optimal
/// measurements, or synthesizing projective realizations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input data is malformed (dimensions, norms, priors, parameter ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two sequences that must have equal length do not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// The ensemble is not amenable to unambiguous discrimination because the
    /// states fail the linear-independence requirement.
    #[error("ensemble not USD-discriminable: smallest Gram eigenvalue {min_eigenvalue:.3e}")]
    NotDiscriminable { min_eigenvalue: f64 },

    /// The Gram matrix is numerically singular; no dual basis exists.
    #[error("states linearly dependent: smallest Gram eigenvalue {min_eigenvalue:.3e}")]
    LinearlyDependent { min_eigenvalue: f64 },

    /// Qutrit surface formulas require a vanishing Berry phase.
    #[error("analytic surface solutions unavailable; use solver (Berry phase {phase:.6e})")]
    BerryPhaseNonzero { phase: f64 },

    /// The d=3 single-extension closed form does not apply to this ensemble.
    #[error("closed-form extension inapplicable; use extend_general: {reason}")]
    ClosedFormInapplicable { reason: String },

    /// The radicand of the explicit extension coefficient is negative.
    #[error("extension coefficient radicand negative: {radicand:.6e}")]
    NegativeRadicand { radicand: f64 },

    /// No feasible extension coefficients were found at this extension
    /// dimension after exhausting all restarts.
    #[error("extension dimension too small (d_ext = {d_ext})")]
    ExtensionTooSmall { d_ext: usize },

    /// The dual-basis Gram matrix cannot be made real by per-state phase
    /// rotations, so real extension coefficients cannot exist.
    #[error("dual Gram not reducible to real form (residual {residual:.3e}); real extension coefficients unsupported")]
    ComplexDualGram { residual: f64 },

    /// The tangency-ratio test needs a strictly interior surface point.
    #[error("KKT ratio test inapplicable; boundary solution (alpha_{index} = {value:.3e})")]
    KktInapplicable { index: usize, value: f64 },

    /// The supplied weights put the inconclusive element outside the PSD cone.
    #[error("M_? not PSD: smallest eigenvalue {min_eigenvalue:.3e}")]
    InconclusiveNotPsd { min_eigenvalue: f64 },

    /// An iterative routine exhausted its iteration budget.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A prepared state registered no counts at all, so its empirical
    /// distribution is undefined.
    #[error("zero total counts for prepared state {state}; empirical probabilities undefined")]
    ZeroRowCounts { state: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
