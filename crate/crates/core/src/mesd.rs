//! Minimum-error discrimination baseline.
//!
//! Every outcome is conclusive and the error probability is minimized. The
//! two-state case has the familiar closed form; for more states the optimal
//! POVM is found by the square-root fixed-point iteration, started from the
//! priors-weighted pretty-good measurement and guarded by the operator
//! optimality certificate.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::linalg;

/// Convergence threshold on the elementwise POVM change.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Iteration cap for the fixed-point loop.
pub const MAX_ITERATIONS: usize = 100_000;

/// Minimum-error discrimination result.
#[derive(Debug, Clone)]
pub struct MesdResult {
    pub p_error_min: f64,
    /// Optimal POVM elements, one per state.
    pub povm: Vec<DMatrix<C64>>,
    pub iterations: usize,
    /// Final elementwise POVM change.
    pub residual: f64,
}

/// Closed-form two-state minimum error probability
/// `(1 - sqrt(1 - 4 q1 q2 |<psi1|psi2>|^2)) / 2`.
pub fn helstrom_2(ensemble: &StateEnsemble) -> Result<f64> {
    if ensemble.num_states() != 2 {
        return Err(Error::InvalidInput(format!(
            "helstrom_2 needs d = 2, got d = {}",
            ensemble.num_states()
        )));
    }
    let s_sq = ensemble.overlap(0, 1).norm_sqr();
    let q = ensemble.priors();
    Ok(0.5 * (1.0 - (1.0 - 4.0 * q[0] * q[1] * s_sq).max(0.0).sqrt()))
}

/// Minimum error probability via the square-root fixed-point iteration.
///
/// Stops when the largest elementwise POVM change falls below
/// [`FIXED_POINT_TOL`]; a non-converged run is reported as an error rather
/// than returned silently.
pub fn mesd_bound(ensemble: &StateEnsemble) -> Result<MesdResult> {
    let d = ensemble.num_states();
    let n = ensemble.dim();
    if d < 2 {
        return Err(Error::InvalidInput("mesd_bound needs at least two states".into()));
    }
    let weighted: Vec<DMatrix<C64>> = ensemble
        .states()
        .iter()
        .zip(ensemble.priors())
        .map(|(psi, &q)| {
            let mut m = DMatrix::<C64>::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] = psi[r] * psi[c].conj() * C64::new(q, 0.0);
                }
            }
            m
        })
        .collect();
    let heavy = ensemble
        .priors()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);

    // Pretty-good start: B^{-1/2} rho'_j B^{-1/2}, completed on the null
    // space of B so the elements sum to the identity exactly.
    let mut b = DMatrix::<C64>::zeros(n, n);
    for w in &weighted {
        b += w;
    }
    let b_scale = linalg::min_eigenvalue(&b).abs().max(1.0);
    let binv = linalg::psd_inv_sqrt(&b, 1e-14 * b_scale);
    let mut povm: Vec<DMatrix<C64>> = weighted.iter().map(|w| &binv * w * &binv).collect();
    complete(&mut povm, heavy, n);

    let p_succ_of = |povm: &[DMatrix<C64>]| -> f64 {
        povm.iter()
            .zip(&weighted)
            .map(|(pi, w)| (w * pi).diagonal().iter().map(|z| z.re).sum::<f64>())
            .sum()
    };

    let mut p_prev = p_succ_of(&povm);
    let mut residual = f64::INFINITY;
    let mut iterations = 0usize;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let updated: Vec<DMatrix<C64>> =
            weighted.iter().zip(&povm).map(|(w, pi)| w * pi * w).collect();
        let mut lambda = DMatrix::<C64>::zeros(n, n);
        for t in &updated {
            lambda += t;
        }
        let scale = linalg::max_abs(&lambda).max(1e-300);
        let linv = linalg::psd_inv_sqrt(&lambda, 1e-14 * scale);
        let mut next: Vec<DMatrix<C64>> = updated.iter().map(|t| &linv * t * &linv).collect();
        complete(&mut next, heavy, n);

        let p_next = p_succ_of(&next);
        if p_next + 1e-14 < p_prev {
            // oscillation guard: average with the previous iterate
            for (new, old) in next.iter_mut().zip(&povm) {
                *new = (&*new + old).scale(0.5);
            }
        }
        residual = next
            .iter()
            .zip(&povm)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0f64, f64::max);
        povm = next;
        p_prev = p_succ_of(&povm);
        if residual < FIXED_POINT_TOL {
            break;
        }
    }
    if residual >= FIXED_POINT_TOL {
        return Err(Error::NonConvergence {
            what: "MESD fixed point",
            iterations,
            residual,
        });
    }
    Ok(MesdResult { p_error_min: 1.0 - p_prev, povm, iterations, residual })
}

/// Add the identity deficit (the projector onto directions outside the state
/// span) to the element of the likeliest state.
fn complete(povm: &mut [DMatrix<C64>], heavy: usize, n: usize) {
    let mut sum = DMatrix::<C64>::zeros(n, n);
    for p in povm.iter() {
        sum += p;
    }
    let deficit = DMatrix::<C64>::identity(n, n) - sum;
    povm[heavy] += deficit;
}

/// Operator optimality certificate for a MESD POVM: the Lagrange operator
/// `Y = sum_j q_j rho_j Pi_j` must be Hermitian and satisfy
/// `Y - q_j rho_j >= 0` for every state. Returns the Hermiticity error and
/// the most negative eigenvalue margin.
pub fn optimality_certificate(
    ensemble: &StateEnsemble,
    povm: &[DMatrix<C64>],
) -> (f64, f64) {
    let n = ensemble.dim();
    let mut y = DMatrix::<C64>::zeros(n, n);
    let mut weighted = Vec::new();
    for (psi, &q) in ensemble.states().iter().zip(ensemble.priors()) {
        let mut m = DMatrix::<C64>::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = psi[r] * psi[c].conj() * C64::new(q, 0.0);
            }
        }
        weighted.push(m);
    }
    for (w, pi) in weighted.iter().zip(povm) {
        y += w * pi;
    }
    let herm_err = linalg::max_abs(&(&y - y.adjoint()));
    let y_h = (&y + y.adjoint()).scale(0.5);
    let margin = weighted
        .iter()
        .map(|w| linalg::min_eigenvalue(&(&y_h - w)))
        .fold(f64::INFINITY, f64::min);
    (herm_err, margin)
}
