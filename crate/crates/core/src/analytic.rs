//! Closed-form optimal weight vectors: the two-state Ivanovic-Dieks-Peres
//! solution and the zero-Berry-phase qutrit surface solutions, together with
//! the convex-set membership primitives they rely on.
//!
//! A weight vector `alpha` is admissible when `G - diag(alpha)` stays
//! positive semidefinite; the boundary of that set is the surface
//! `f_d(alpha) = det(G - diag(alpha)) = 0`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::ensemble::{GramData, StateEnsemble};
use crate::error::{Error, Result};
use crate::linalg;

/// Feasibility tolerance on the smallest eigenvalue of `G - diag(alpha)`.
pub const PSD_TOL: f64 = 1e-10;
/// Surface membership tolerance on `|f_d|`.
pub const SURFACE_TOL: f64 = 1e-9;
/// Ties between candidate success probabilities below this are broken by
/// preferring the first-type solution.
pub const TIE_TOL: f64 = 1e-12;

/// A conclusive-weight vector together with its feasibility data.
#[derive(Debug, Clone)]
pub struct AlphaVector {
    pub alphas: Vec<f64>,
    /// True when all components lie in `[0, 1]` and `G - diag(alpha)` is PSD.
    pub feasible: bool,
    /// `det(G - diag(alpha))`.
    pub f_value: f64,
}

impl AlphaVector {
    /// Evaluate feasibility of `alphas` against a Gram matrix.
    pub fn evaluate(gram: &DMatrix<C64>, alphas: Vec<f64>) -> Self {
        let (feasible, f_value) = in_convex_set(gram, &alphas);
        Self { alphas, feasible, f_value }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Success probability `sum_j q_j alpha_j`.
pub fn success_prob(alphas: &[f64], priors: &[f64]) -> Result<f64> {
    if alphas.len() != priors.len() {
        return Err(Error::LengthMismatch { expected: alphas.len(), got: priors.len() });
    }
    Ok(alphas.iter().zip(priors).map(|(a, q)| a * q).sum())
}

/// Membership test for the convex feasibility set: true iff
/// `G - diag(alpha)` is PSD (smallest eigenvalue >= -PSD_TOL) and every
/// component lies in `[0, 1]` up to the same tolerance. Also returns
/// `f = det(G - diag(alpha))`.
pub fn in_convex_set(gram: &DMatrix<C64>, alphas: &[f64]) -> (bool, f64) {
    assert_eq!(gram.nrows(), alphas.len(), "alpha length must match Gram dimension");
    let shifted = linalg::shifted(gram, alphas);
    let f_value = linalg::hermitian_det(&shifted);
    let range_ok = alphas.iter().all(|&a| (-PSD_TOL..=1.0 + PSD_TOL).contains(&a));
    let psd_ok = linalg::is_psd(&shifted, PSD_TOL);
    (range_ok && psd_ok, f_value)
}

/// The explicit qutrit cubic
///
/// ```text
/// f3 = (1-a1)(1-a2)(1-a3) - s1^2 (1-a1) - s2^2 (1-a2) - s3^2 (1-a3)
///      + 2 s1 s2 s3 cos(Phi)
/// ```
///
/// which coincides with `det(G - diag(alpha))` for the Levi-Civita overlap
/// convention of [`crate::ensemble::QutritOverlaps`].
pub fn f3_explicit(s: [f64; 3], berry_phase: f64, alphas: [f64; 3]) -> f64 {
    let b = [1.0 - alphas[0], 1.0 - alphas[1], 1.0 - alphas[2]];
    b[0] * b[1] * b[2] - s[0] * s[0] * b[0] - s[1] * s[1] * b[1] - s[2] * s[2] * b[2]
        + 2.0 * s[0] * s[1] * s[2] * berry_phase.cos()
}

/// The pairwise minor conditions `(1-a_j)(1-a_k) >= s_l^2`, exposed for
/// diagnostics alongside the eigenvalue test that subsumes them.
pub fn pairwise_conditions(s: [f64; 3], alphas: [f64; 3]) -> [f64; 3] {
    let b = [1.0 - alphas[0], 1.0 - alphas[1], 1.0 - alphas[2]];
    [b[1] * b[2] - s[0] * s[0], b[0] * b[2] - s[1] * s[1], b[0] * b[1] - s[2] * s[2]]
}

/// Optimal two-state weights (Ivanovic-Dieks-Peres).
///
/// Interior regime `s <= sqrt(q2/q1) <= 1/s`:
/// `alpha = (1 - sqrt(q2/q1) s, 1 - sqrt(q1/q2) s)`. Otherwise the better of
/// the boundary points `(1 - s^2, 0)` and `(0, 1 - s^2)`.
pub fn idp_optimal_2(ensemble: &StateEnsemble) -> Result<AlphaVector> {
    if ensemble.num_states() != 2 {
        return Err(Error::InvalidInput(format!(
            "idp_optimal_2 needs d = 2, got d = {}",
            ensemble.num_states()
        )));
    }
    let gram = ensemble.gram_matrix();
    let s = gram[(0, 1)].norm();
    if s >= 1.0 - 1e-14 {
        return Err(Error::InvalidInput("identical states (s = 1) cannot be discriminated".into()));
    }
    let [q1, q2] = [ensemble.priors()[0], ensemble.priors()[1]];
    let interior = s * s * q1 <= q2 && s * s * q2 <= q1;
    let alphas = if interior && q1 > 0.0 && q2 > 0.0 {
        vec![1.0 - (q2 / q1).sqrt() * s, 1.0 - (q1 / q2).sqrt() * s]
    } else {
        let keep_first = q1 * (1.0 - s * s) >= q2 * (1.0 - s * s);
        if keep_first {
            vec![1.0 - s * s, 0.0]
        } else {
            vec![0.0, 1.0 - s * s]
        }
    };
    Ok(AlphaVector::evaluate(&gram, alphas))
}

/// Which analytic surface family a candidate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// All three states conclusively identified: `alpha_j = 1 - s_k s_l / s_j`.
    First,
    /// The prior-weighted family; `favored` is the index playing the role of
    /// `x` in the formula (0-based).
    Second { favored: usize },
}

/// One analytic candidate. `alpha` is `None` when the formula is undefined
/// for these overlaps (division by zero).
#[derive(Debug, Clone)]
pub struct SurfaceCandidate {
    pub kind: SurfaceKind,
    pub alpha: Option<AlphaVector>,
    pub p_success: Option<f64>,
}

/// Candidate set for the zero-Berry-phase qutrit problem: one first-type
/// point and three second-type points. Infeasible candidates are flagged,
/// never dropped or clamped.
#[derive(Debug, Clone)]
pub struct SurfaceSolutions {
    pub candidates: Vec<SurfaceCandidate>,
}

impl SurfaceSolutions {
    /// Best feasible candidate by success probability; ties within
    /// [`TIE_TOL`] prefer the first-type solution.
    pub fn best_feasible(&self) -> Option<&SurfaceCandidate> {
        let mut best: Option<&SurfaceCandidate> = None;
        for cand in &self.candidates {
            let Some(alpha) = &cand.alpha else { continue };
            if !alpha.feasible {
                continue;
            }
            let p = cand.p_success.expect("feasible candidate has p_success");
            match best {
                None => best = Some(cand),
                Some(b) => {
                    let bp = b.p_success.unwrap();
                    let tied_first = (p - bp).abs() <= TIE_TOL
                        && cand.kind == SurfaceKind::First
                        && b.kind != SurfaceKind::First;
                    if p > bp + TIE_TOL || tied_first {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    }
}

/// Analytic surface candidates for `d = 3` with zero Berry phase.
///
/// Requires `|Phi| <= 1e-9`; otherwise the sixth-order tangency system has no
/// printed solution and the numeric solver must be used.
pub fn surface_solutions_3(gram: &GramData, priors: &[f64]) -> Result<SurfaceSolutions> {
    let q = gram
        .qutrit
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("surface solutions require d = 3".into()))?;
    if priors.len() != 3 {
        return Err(Error::LengthMismatch { expected: 3, got: priors.len() });
    }
    if q.berry_phase.abs() > 1e-9 {
        return Err(Error::BerryPhaseNonzero { phase: q.berry_phase });
    }
    let s = q.magnitudes;
    let mut candidates = Vec::with_capacity(4);

    // First type: alpha_j = 1 - s_k s_l / s_j.
    let all_zero = s.iter().all(|&v| v < 1e-15);
    let first = if all_zero {
        Some([1.0, 1.0, 1.0])
    } else if s.iter().any(|&v| v < 1e-15) {
        None
    } else {
        Some([
            1.0 - s[1] * s[2] / s[0],
            1.0 - s[0] * s[2] / s[1],
            1.0 - s[0] * s[1] / s[2],
        ])
    };
    candidates.push(make_candidate(SurfaceKind::First, first, gram, priors));

    // Second type, one candidate per choice of the favored index x; the
    // remaining indices are y < z. The subtracted components are
    //   (sqrt(qy) sz + sqrt(qz) sy) / sqrt(qx)   at position x,
    //   (sqrt(qx) sz - sqrt(qz) sx) / sqrt(qy)   at position y,
    //   (sqrt(qx) sy - sqrt(qy) sx) / sqrt(qz)   at position z.
    for x in 0..3 {
        let (y, z) = match x {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (rx, ry, rz) = (priors[x].sqrt(), priors[y].sqrt(), priors[z].sqrt());
        let alphas = if rx < 1e-15 || ry < 1e-15 || rz < 1e-15 {
            None
        } else {
            let mut a = [0.0f64; 3];
            a[x] = 1.0 - (ry * s[z] + rz * s[y]) / rx;
            a[y] = 1.0 - (rx * s[z] - rz * s[x]) / ry;
            a[z] = 1.0 - (rx * s[y] - ry * s[x]) / rz;
            Some(a)
        };
        candidates.push(make_candidate(SurfaceKind::Second { favored: x }, alphas, gram, priors));
    }
    Ok(SurfaceSolutions { candidates })
}

fn make_candidate(
    kind: SurfaceKind,
    alphas: Option<[f64; 3]>,
    gram: &GramData,
    priors: &[f64],
) -> SurfaceCandidate {
    match alphas {
        None => SurfaceCandidate { kind, alpha: None, p_success: None },
        Some(a) => {
            let alpha = AlphaVector::evaluate(&gram.gram, a.to_vec());
            let p = success_prob(&alpha.alphas, priors).expect("lengths match");
            SurfaceCandidate { kind, alpha: Some(alpha), p_success: Some(p) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{self, lg_triple, LgTripleParams};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn two_state(s: f64, priors: [f64; 2]) -> StateEnsemble {
        let psi1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let psi2 =
            DVector::from_vec(vec![C64::new(s, 0.0), C64::new((1.0f64 - s * s).sqrt(), 0.0)]);
        StateEnsemble::new(2, vec![psi1, psi2], priors.to_vec()).unwrap()
    }

    #[test]
    fn success_prob_is_the_linear_form() {
        assert_abs_diff_eq!(
            success_prob(&[1.0, 1.0, 1.0], &[0.2, 0.3, 0.5]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            success_prob(&[0.375; 3], &[1.0 / 3.0; 3]).unwrap(),
            0.375,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            success_prob(&[0.5, 0.2], &[0.7, 0.3]).unwrap(),
            0.41,
            epsilon = 1e-15
        );
        assert!(success_prob(&[0.5], &[0.7, 0.3]).is_err());
    }

    #[test]
    fn convex_set_two_state_boundary() {
        let gram = two_state(0.5, [0.5, 0.5]).gram_matrix();
        let (ok, f) = in_convex_set(&gram, &[0.0, 0.0]);
        assert!(ok);
        assert_abs_diff_eq!(f, 0.75, epsilon = 1e-12);
        let (ok, f) = in_convex_set(&gram, &[0.5, 0.5]);
        assert!(ok);
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-12);
        let (ok, f) = in_convex_set(&gram, &[0.6, 0.6]);
        assert!(!ok);
        assert_abs_diff_eq!(f, -0.09, epsilon = 1e-12);
    }

    #[test]
    fn idp_interior_equal_priors() {
        let alpha = idp_optimal_2(&two_state(0.5, [0.5, 0.5])).unwrap();
        assert!(alpha.feasible);
        assert_abs_diff_eq!(alpha.alphas[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.alphas[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            success_prob(&alpha.alphas, &[0.5, 0.5]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn idp_boundary_for_skewed_priors() {
        // sqrt(q2/q1) ~ 0.229 < s = 0.5 pushes the optimum to the boundary.
        let alpha = idp_optimal_2(&two_state(0.5, [0.95, 0.05])).unwrap();
        assert!(alpha.feasible);
        assert_abs_diff_eq!(alpha.alphas[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.alphas[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            success_prob(&alpha.alphas, &[0.95, 0.05]).unwrap(),
            0.7125,
            epsilon = 1e-12
        );
    }

    #[test]
    fn idp_orthogonal_states() {
        let alpha = idp_optimal_2(&two_state(0.0, [0.3, 0.7])).unwrap();
        assert_abs_diff_eq!(alpha.alphas[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.alphas[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn surface_first_type_symmetric() {
        let e = lg_triple(
            &LgTripleParams { xi: PI / 3.0, theta: 2.0 * PI / 3.0, phi: 2.0 * PI / 3.0 },
            [1.0 / 3.0; 3],
        )
        .unwrap();
        let gd = ensemble::gram_data(&e);
        let sols = surface_solutions_3(&gd, e.priors()).unwrap();
        assert_eq!(sols.candidates.len(), 4);
        let first = &sols.candidates[0];
        let alpha = first.alpha.as_ref().unwrap();
        for a in &alpha.alphas {
            assert_abs_diff_eq!(*a, 0.375, epsilon = 1e-12);
        }
        assert!(alpha.feasible);
        assert_abs_diff_eq!(first.p_success.unwrap(), 0.375, epsilon = 1e-12);
        let best = sols.best_feasible().unwrap();
        assert_eq!(best.kind, SurfaceKind::First);
    }

    #[test]
    fn surface_orthogonal_limit() {
        let states: Vec<_> = (0..3)
            .map(|j| {
                let mut v = DVector::<C64>::zeros(3);
                v[j] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        let e = StateEnsemble::new(3, states, vec![0.2, 0.5, 0.3]).unwrap();
        let gd = ensemble::gram_data(&e);
        let sols = surface_solutions_3(&gd, e.priors()).unwrap();
        let first = sols.candidates[0].alpha.as_ref().unwrap();
        for a in &first.alphas {
            assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(sols.candidates[0].p_success.unwrap(), 1.0, epsilon = 1e-12);
        // second type reduces to all ones as well
        for cand in &sols.candidates[1..] {
            for a in &cand.alpha.as_ref().unwrap().alphas {
                assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn surface_requires_zero_berry_phase() {
        let z = C64::from_polar(0.5, PI / 6.0);
        let gram = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                z,
                z.conj(),
                z.conj(),
                C64::new(1.0, 0.0),
                z,
                z,
                z.conj(),
                C64::new(1.0, 0.0),
            ],
        );
        let e = StateEnsemble::from_gram(&gram, vec![1.0 / 3.0; 3]).unwrap();
        let gd = ensemble::gram_data(&e);
        let err = surface_solutions_3(&gd, e.priors()).unwrap_err();
        assert!(err.to_string().contains("use solver"));
    }

    #[test]
    fn surface_candidates_lie_on_surface() {
        let e = lg_triple(
            &LgTripleParams { xi: PI / 3.0, theta: 2.0 * PI / 3.0, phi: 0.53 * PI },
            [0.5, 0.25, 0.25],
        )
        .unwrap();
        let gd = ensemble::gram_data(&e);
        let q = gd.qutrit.unwrap();
        let sols = surface_solutions_3(&gd, e.priors()).unwrap();
        for cand in &sols.candidates {
            let Some(alpha) = &cand.alpha else { continue };
            if alpha.feasible {
                let a = [alpha.alphas[0], alpha.alphas[1], alpha.alphas[2]];
                let f3 = f3_explicit(q.magnitudes, q.berry_phase, a);
                assert!(f3.abs() <= 1e-9, "|f3| = {:e}", f3.abs());
                assert!(alpha.f_value.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn first_type_undefined_with_one_zero_overlap() {
        // psi1 orthogonal to psi2, both overlapping psi3.
        let g = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.3, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.2, 0.0),
                C64::new(0.3, 0.0),
                C64::new(0.2, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let e = StateEnsemble::from_gram(&g, vec![1.0 / 3.0; 3]).unwrap();
        let gd = ensemble::gram_data(&e);
        let sols = surface_solutions_3(&gd, e.priors()).unwrap();
        assert!(sols.candidates[0].alpha.is_none());
    }
}
