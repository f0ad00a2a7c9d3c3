//! Numeric optimal-weight solver for arbitrary ensemble size and Berry
//! phase, plus POVM assembly and the tangency (KKT) diagnostic.
//!
//! The feasible set is the spectrahedron `{alpha : G - diag(alpha) >= 0,
//! alpha >= 0}` with a linear objective, so a bespoke log-det barrier with
//! damped Newton steps is enough; no external solver is involved. The
//! barrier parameter is reduced by a factor of five per outer iteration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::analytic::{success_prob, AlphaVector};
use crate::ensemble::{dual_basis, DualBasis, StateEnsemble};
use crate::error::{Error, Result};
use crate::linalg;

/// Practical size bound; the dense barrier solver is meant for small `d`.
pub const MAX_STATES: usize = 12;

/// Solution report for the convex weight optimization.
#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    #[serde(serialize_with = "serialize_alpha")]
    pub alpha_star: AlphaVector,
    pub p_success: f64,
    /// Total Newton steps across all outer iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    /// Barrier duality-gap estimate `2 d mu` at the final center.
    pub barrier_gap: f64,
    /// `|det(G - diag(alpha*))|`; near zero when the optimum sits on the
    /// determinant surface.
    pub surface_gap: f64,
    /// Hessian-weighted stationarity residual (Newton decrement) at the
    /// final center; robust to the conditioning of the nearly singular
    /// constraint block.
    pub kkt_residual: f64,
}

fn serialize_alpha<S: serde::Serializer>(a: &AlphaVector, ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = ser.serialize_struct("AlphaVector", 3)?;
    st.serialize_field("alphas", &a.alphas)?;
    st.serialize_field("feasible", &a.feasible)?;
    st.serialize_field("f_value", &a.f_value)?;
    st.end()
}

/// Maximize `sum_j q_j alpha_j` over the feasibility set of the ensemble.
pub fn solve_optimal_alpha(ensemble: &StateEnsemble) -> Result<SolverReport> {
    solve_optimal_alpha_gram(&ensemble.gram_matrix(), ensemble.priors())
}

/// Same as [`solve_optimal_alpha`] but starting from an explicit Gram matrix.
pub fn solve_optimal_alpha_gram(gram: &DMatrix<C64>, priors: &[f64]) -> Result<SolverReport> {
    let d = gram.nrows();
    if d != priors.len() {
        return Err(Error::LengthMismatch { expected: d, got: priors.len() });
    }
    if d > MAX_STATES {
        return Err(Error::InvalidInput(format!("solver supports d <= {MAX_STATES}, got {d}")));
    }
    let min_eig = linalg::min_eigenvalue(gram);
    if min_eig <= crate::ensemble::RANK_TOL {
        return Err(Error::NotDiscriminable { min_eigenvalue: min_eig });
    }

    // Strictly interior start. The nominal choice eps (1 - lambda_min) works
    // across the interesting range; halve until the Cholesky test accepts it
    // to cover nearly singular and nearly orthonormal Gram matrices alike.
    let mut a0 = 0.01 * (1.0 - min_eig) + 1e-3 * min_eig.min(1.0);
    let mut alpha = vec![a0; d];
    for _ in 0..200 {
        if a0 > 0.0 && cholesky_feasible(gram, &alpha) {
            break;
        }
        a0 *= 0.5;
        alpha.iter_mut().for_each(|x| *x = a0);
    }
    if !cholesky_feasible(gram, &alpha) {
        return Err(Error::NotDiscriminable { min_eigenvalue: min_eig });
    }

    let mut mu = 1.0f64;
    let mu_min = 1e-10 / (2.0 * d as f64);
    let mut newton_total = 0usize;
    let mut outer = 0usize;
    let mut last_decrement;
    loop {
        outer += 1;
        let (steps, decrement) = center(gram, priors, &mut alpha, mu)?;
        newton_total += steps;
        last_decrement = decrement;
        if mu <= mu_min {
            break;
        }
        mu /= 5.0;
        if outer > 200 {
            return Err(Error::NonConvergence {
                what: "barrier solver",
                iterations: newton_total,
                residual: last_decrement,
            });
        }
    }

    let alpha_star = AlphaVector::evaluate(gram, alpha);
    let p_success = success_prob(&alpha_star.alphas, priors)?;
    Ok(SolverReport {
        surface_gap: alpha_star.f_value.abs(),
        p_success,
        iterations: newton_total,
        outer_iterations: outer,
        barrier_gap: 2.0 * d as f64 * mu,
        kkt_residual: last_decrement,
        alpha_star,
    })
}

fn cholesky_feasible(gram: &DMatrix<C64>, alphas: &[f64]) -> bool {
    alphas.iter().all(|&a| a > 0.0)
        && linalg::cholesky_pd(&linalg::shifted(gram, alphas)).is_some()
}

/// Barrier objective `-q.alpha - mu (log det S + sum log alpha)` and its
/// gradient. Exposed for finite-difference validation.
pub fn barrier_value_grad(
    gram: &DMatrix<C64>,
    priors: &[f64],
    alphas: &[f64],
    mu: f64,
) -> Option<(f64, Vec<f64>)> {
    if alphas.iter().any(|&a| a <= 0.0) {
        return None;
    }
    let s = linalg::shifted(gram, alphas);
    let chol = linalg::cholesky_pd(&s)?;
    let logdet = 2.0 * chol.l().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
    let value = -success_prob(alphas, priors).ok()?
        - mu * (logdet + alphas.iter().map(|a| a.ln()).sum::<f64>());
    let sinv = chol.inverse();
    let grad = (0..alphas.len())
        .map(|j| -priors[j] + mu * (sinv[(j, j)].re - 1.0 / alphas[j]))
        .collect();
    Some((value, grad))
}

/// Damped Newton centering for fixed `mu`. Returns (steps, final Newton
/// decrement).
fn center(
    gram: &DMatrix<C64>,
    priors: &[f64],
    alphas: &mut [f64],
    mu: f64,
) -> Result<(usize, f64)> {
    let d = alphas.len();
    let mut steps = 0usize;
    loop {
        let s = linalg::shifted(gram, alphas);
        let chol = linalg::cholesky_pd(&s).ok_or(Error::NonConvergence {
            what: "barrier centering",
            iterations: steps,
            residual: f64::NAN,
        })?;
        let sinv = chol.inverse();
        let grad = DVector::from_iterator(
            d,
            (0..d).map(|j| -priors[j] + mu * (sinv[(j, j)].re - 1.0 / alphas[j])),
        );
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                hess[(j, k)] = mu * sinv[(j, k)].norm_sqr();
            }
            hess[(j, j)] += mu / (alphas[j] * alphas[j]);
        }
        let step = hess
            .clone()
            .cholesky()
            .map(|c| c.solve(&(-&grad)))
            .unwrap_or_else(|| -&grad * 1e-6);
        let decrement = -grad.dot(&step);
        let lambda = decrement.max(0.0).sqrt();
        if decrement.abs() < 1e-14 || steps >= 80 {
            return Ok((steps, lambda));
        }

        // backtrack to feasibility, then Armijo
        let (phi0, _) = barrier_value_grad(gram, priors, alphas, mu)
            .expect("current iterate is feasible");
        let mut t = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = alphas.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if cholesky_feasible(gram, &trial) {
                if let Some((phi, _)) = barrier_value_grad(gram, priors, &trial, mu) {
                    if phi <= phi0 - 0.25 * t * decrement {
                        alphas.copy_from_slice(&trial);
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        steps += 1;
        if !accepted {
            return Ok((steps, lambda));
        }
    }
}

/// A full unambiguous POVM: conclusive rank-one elements built on the dual
/// basis plus the inconclusive remainder.
#[derive(Debug, Clone)]
pub struct UsdPovm {
    pub alpha: AlphaVector,
    pub dual: DualBasis,
    /// `M_j = alpha_j |dual_j><dual_j|`.
    pub elements: Vec<DMatrix<C64>>,
    /// `M_? = I - sum_j M_j`.
    pub inconclusive: DMatrix<C64>,
}

/// POVM health check values; all should be at roundoff level for a feasible
/// weight vector.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PovmDiagnostics {
    pub completeness_error: f64,
    pub min_inconclusive_eigenvalue: f64,
    /// `max_{y != x} <psi_x|M_y|psi_x>`.
    pub max_cross_probability: f64,
    /// `max_j |<psi_j|M_j|psi_j> - alpha_j|`.
    pub max_diagonal_error: f64,
}

impl UsdPovm {
    pub fn diagnostics(&self, ensemble: &StateEnsemble) -> PovmDiagnostics {
        let n = ensemble.dim();
        let mut sum = self.inconclusive.clone();
        for m in &self.elements {
            sum += m;
        }
        let completeness_error = linalg::max_abs(&(&sum - DMatrix::<C64>::identity(n, n)));
        let min_inconclusive_eigenvalue = linalg::min_eigenvalue(&self.inconclusive);
        let mut max_cross: f64 = 0.0;
        let mut max_diag: f64 = 0.0;
        for (x, psi) in ensemble.states().iter().enumerate() {
            for (y, m) in self.elements.iter().enumerate() {
                let p = psi.dotc(&(m * psi)).re;
                if y == x {
                    max_diag = max_diag.max((p - self.alpha.alphas[y]).abs());
                } else {
                    max_cross = max_cross.max(p.abs());
                }
            }
        }
        PovmDiagnostics {
            completeness_error,
            min_inconclusive_eigenvalue,
            max_cross_probability: max_cross,
            max_diagonal_error: max_diag,
        }
    }
}

/// Assemble the POVM for the given weights. Fails when the weights are
/// infeasible, i.e. the inconclusive element leaves the PSD cone.
pub fn build_povm(ensemble: &StateEnsemble, alpha: &AlphaVector) -> Result<UsdPovm> {
    let d = ensemble.num_states();
    if alpha.len() != d {
        return Err(Error::LengthMismatch { expected: d, got: alpha.len() });
    }
    let dual = dual_basis(ensemble)?;
    let n = ensemble.dim();
    let elements: Vec<DMatrix<C64>> = (0..d)
        .map(|j| {
            let w = dual.vector(j);
            let mut m = DMatrix::<C64>::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] = w[r] * w[c].conj() * C64::new(alpha.alphas[j], 0.0);
                }
            }
            m
        })
        .collect();
    let mut inconclusive = DMatrix::<C64>::identity(n, n);
    for m in &elements {
        inconclusive -= m;
    }
    let min_eig = linalg::min_eigenvalue(&inconclusive);
    if min_eig < -1e-9 {
        return Err(Error::InconclusiveNotPsd { min_eigenvalue: min_eig });
    }
    Ok(UsdPovm { alpha: alpha.clone(), dual, elements, inconclusive })
}

/// Tangency-ratio residual at an interior surface point:
/// `max_{j<k} |q_j df/da_k - q_k df/da_j| / scale` with
/// `scale = max(q) * max(1, |grad f|_inf)`. Near zero certifies that the
/// success-probability hyperplane is tangent to the determinant surface.
///
/// Weights on a coordinate boundary make the ratio test meaningless and are
/// rejected.
pub fn kkt_check(gram: &DMatrix<C64>, priors: &[f64], alphas: &[f64]) -> Result<f64> {
    if priors.len() != alphas.len() {
        return Err(Error::LengthMismatch { expected: alphas.len(), got: priors.len() });
    }
    for (j, &a) in alphas.iter().enumerate() {
        if a <= 0.0 {
            return Err(Error::KktInapplicable { index: j, value: a });
        }
    }
    let grad = linalg::det_gradient(gram, alphas);
    let grad_max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let q_max = priors.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let scale = (q_max * grad_max.max(1.0)).max(1e-300);
    let mut worst: f64 = 0.0;
    for j in 0..alphas.len() {
        for k in (j + 1)..alphas.len() {
            worst = worst.max((priors[j] * grad[k] - priors[k] * grad[j]).abs());
        }
    }
    Ok(worst / scale)
}
