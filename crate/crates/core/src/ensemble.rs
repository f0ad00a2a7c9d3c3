//! Discrimination instances: pure-state ensembles with priors, their Gram
//! data, and the dual (reciprocal) basis.
//!
//! The qutrit family used throughout the experiment section lives here as
//! [`lg_triple`]: three real states built from Laguerre-Gaussian mode
//! superpositions, parameterized by the angles `xi`, `theta`, `phi`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance for unit-norm and prior-sum validation.
pub const NORM_TOL: f64 = 1e-12;
/// Linear-independence threshold on the smallest Gram eigenvalue. Well above
/// double-precision noise, well below physically meaningful overlaps.
pub const RANK_TOL: f64 = 1e-10;

/// An ensemble of `d` pure states on an `n`-dimensional space with prior
/// probabilities. States are stored as unit-norm complex column vectors.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    dim: usize,
    states: Vec<DVector<C64>>,
    priors: Vec<f64>,
}

impl StateEnsemble {
    /// Validate and build an ensemble. Checks, in order: shape, unit norms,
    /// prior validity, and linear independence of the states. The first
    /// violation found is reported.
    pub fn new(dim: usize, states: Vec<DVector<C64>>, priors: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if states.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one state".into()));
        }
        if priors.len() != states.len() {
            return Err(Error::LengthMismatch { expected: states.len(), got: priors.len() });
        }
        for (j, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "state {j} has dimension {}, expected {dim}",
                    s.len()
                )));
            }
            let norm = s.norm();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidInput(format!(
                    "state {j} is not unit norm (|psi| = {norm:.15})"
                )));
            }
        }
        let sum: f64 = priors.iter().sum();
        if priors.iter().any(|&q| q < 0.0) {
            return Err(Error::InvalidInput("priors must be nonnegative".into()));
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("priors sum to {sum:.15}, expected 1")));
        }
        let ensemble = Self { dim, states, priors };
        let min_eig = linalg::min_eigenvalue(&ensemble.gram_matrix());
        if min_eig <= RANK_TOL {
            return Err(Error::NotDiscriminable { min_eigenvalue: min_eig });
        }
        Ok(ensemble)
    }

    /// Build without validation. Intended for callers that have already
    /// checked the invariants or deliberately construct degenerate inputs.
    pub fn new_unchecked(dim: usize, states: Vec<DVector<C64>>, priors: Vec<f64>) -> Self {
        Self { dim, states, priors }
    }

    /// Realize a target Gram matrix as explicit unit vectors (Cholesky
    /// factorization, `n = d`) with the given priors.
    pub fn from_gram(gram: &DMatrix<C64>, priors: Vec<f64>) -> Result<Self> {
        let d = gram.nrows();
        if gram.ncols() != d {
            return Err(Error::InvalidInput("Gram matrix must be square".into()));
        }
        let min_eig = linalg::min_eigenvalue(gram);
        if min_eig <= RANK_TOL {
            return Err(Error::NotDiscriminable { min_eigenvalue: min_eig });
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("Gram matrix is not positive definite".into()))?;
        let lh = chol.l().adjoint();
        let states: Vec<DVector<C64>> = (0..d).map(|j| lh.column(j).into_owned()).collect();
        Self::new(d, states, priors)
    }

    /// Number of states `d`.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Space dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[DVector<C64>] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &DVector<C64> {
        &self.states[j]
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Pairwise inner product `<psi_j|psi_k>`.
    pub fn overlap(&self, j: usize, k: usize) -> C64 {
        self.states[j].dotc(&self.states[k])
    }

    /// Gram matrix of all pairwise inner products.
    pub fn gram_matrix(&self) -> DMatrix<C64> {
        let d = self.num_states();
        DMatrix::from_fn(d, d, |j, k| self.overlap(j, k))
    }

    pub fn to_json(&self) -> EnsembleJson {
        EnsembleJson {
            dimension: self.dim,
            states: self.states.iter().map(linalg::vector_to_pairs).collect(),
            priors: self.priors.clone(),
        }
    }

    pub fn from_json(json: &EnsembleJson) -> Result<Self> {
        let states = json.states.iter().map(|s| linalg::pairs_to_vector(s)).collect();
        Self::new(json.dimension, states, json.priors.clone())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: EnsembleJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("ensemble JSON parse error: {e}")))?;
        Self::from_json(&json)
    }
}

/// Wire format for ensembles: complex amplitudes as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleJson {
    pub dimension: usize,
    pub states: Vec<Vec<[f64; 2]>>,
    pub priors: Vec<f64>,
}

/// Angles of the Laguerre-Gaussian qutrit triple, in radians.
///
/// Valid ranges are the open intervals `0 < xi < pi/2`, `0 < theta < pi`,
/// `0 < phi < pi`. The struct itself is plain data; [`LgTripleParams::new`]
/// enforces the ranges for callers that want early validation, while
/// [`lg_triple`] reports degenerate parameter combinations through the
/// ensemble linear-independence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgTripleParams {
    pub xi: f64,
    pub theta: f64,
    pub phi: f64,
}

impl LgTripleParams {
    pub fn new(xi: f64, theta: f64, phi: f64) -> Result<Self> {
        let check = |name: &str, v: f64, hi: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 || v >= hi {
                return Err(Error::InvalidInput(format!(
                    "{name} = {v} outside the open interval (0, {hi})"
                )));
            }
            Ok(())
        };
        check("xi", xi, std::f64::consts::FRAC_PI_2)?;
        check("theta", theta, std::f64::consts::PI)?;
        check("phi", phi, std::f64::consts::PI)?;
        Ok(Self { xi, theta, phi })
    }
}

/// The three real qutrit states of the Laguerre-Gaussian family, expressed in
/// the standard basis `(|l0>, |l1>, |l2>)`:
///
/// ```text
/// |psi1> = cos(xi) |l0>                                  + sin(xi) |l2>
/// |psi2> = cos(xi) (cos(theta) |l0> + sin(theta) |l1>)   + sin(xi) |l2>
/// |psi3> = cos(xi) (cos(phi) |l0>   - sin(phi) |l1>)     + sin(xi) |l2>
/// ```
///
/// Degenerate parameters (e.g. `xi = pi/2`, which collapses all three states
/// onto `|l2>`) yield [`Error::NotDiscriminable`].
pub fn lg_triple(params: &LgTripleParams, priors: [f64; 3]) -> Result<StateEnsemble> {
    let (c, s) = (params.xi.cos(), params.xi.sin());
    let re = |x: f64| C64::new(x, 0.0);
    let psi1 = DVector::from_vec(vec![re(c), re(0.0), re(s)]);
    let psi2 = DVector::from_vec(vec![
        re(c * params.theta.cos()),
        re(c * params.theta.sin()),
        re(s),
    ]);
    let psi3 = DVector::from_vec(vec![
        re(c * params.phi.cos()),
        re(-c * params.phi.sin()),
        re(s),
    ]);
    StateEnsemble::new(3, vec![psi1, psi2, psi3], priors.to_vec())
}

/// Gram matrix plus, for qutrit ensembles, the overlap magnitudes, phases and
/// Berry phase in the Levi-Civita labeling.
#[derive(Debug, Clone)]
pub struct GramData {
    /// Hermitian matrix with unit diagonal.
    pub gram: DMatrix<C64>,
    /// Present when `d = 3`.
    pub qutrit: Option<QutritOverlaps>,
}

/// Overlap data of a qutrit ensemble.
///
/// Index convention: `s_l` and `zeta_l` describe the overlap of the two
/// states whose indices differ from `l`, oriented so that `epsilon_{jkl} = +1`:
///
/// ```text
/// <psi1|psi2> = s3 e^{i zeta3},  <psi2|psi3> = s1 e^{i zeta1},  <psi3|psi1> = s2 e^{i zeta2}
/// ```
///
/// Arrays are stored as `[s1, s2, s3]` / `[zeta1, zeta2, zeta3]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QutritOverlaps {
    pub magnitudes: [f64; 3],
    pub phases: [f64; 3],
    /// `zeta1 + zeta2 + zeta3` reduced to `(-pi, pi]`.
    pub berry_phase: f64,
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Compute the Gram matrix (and qutrit overlap data when `d = 3`).
pub fn gram_data(ensemble: &StateEnsemble) -> GramData {
    let gram = ensemble.gram_matrix();
    let qutrit = (ensemble.num_states() == 3).then(|| {
        let g12 = gram[(0, 1)];
        let g23 = gram[(1, 2)];
        let g31 = gram[(2, 0)];
        let magnitudes = [g23.norm(), g31.norm(), g12.norm()];
        let phases = [phase_of(g23), phase_of(g31), phase_of(g12)];
        QutritOverlaps {
            magnitudes,
            phases,
            berry_phase: wrap_angle(phases[0] + phases[1] + phases[2]),
        }
    });
    GramData { gram, qutrit }
}

fn phase_of(z: C64) -> f64 {
    if z.norm() < 1e-15 {
        0.0
    } else {
        z.arg()
    }
}

/// Dual (reciprocal) basis: vectors biorthogonal to the ensemble states,
/// `<dual_j|psi_k> = delta_jk`. Generally unnormalized.
#[derive(Debug, Clone)]
pub struct DualBasis {
    vectors: Vec<DVector<C64>>,
    /// Gram matrix of the dual vectors; equals the inverse of the state Gram.
    pub gram_inverse: DMatrix<C64>,
}

impl DualBasis {
    pub fn vectors(&self) -> &[DVector<C64>] {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> &DVector<C64> {
        &self.vectors[j]
    }

    /// `<dual_j|dual_k>`, read off the cached inverse Gram.
    pub fn cross(&self, j: usize, k: usize) -> C64 {
        self.gram_inverse[(j, k)]
    }
}

/// Dual basis via the inverse Gram matrix: with `V` holding the states as
/// columns, the duals are the columns of `V G^{-1}`.
pub fn dual_basis(ensemble: &StateEnsemble) -> Result<DualBasis> {
    let gram = ensemble.gram_matrix();
    let min_eig = linalg::min_eigenvalue(&gram);
    if min_eig <= RANK_TOL {
        return Err(Error::LinearlyDependent { min_eigenvalue: min_eig });
    }
    let inv = gram
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::LinearlyDependent { min_eigenvalue: min_eig })?;
    let v = linalg::column_matrix(ensemble.states());
    let w = &v * &inv;
    let vectors = (0..ensemble.num_states()).map(|j| w.column(j).into_owned()).collect();
    Ok(DualBasis { vectors, gram_inverse: inv })
}

/// The overlap pattern used for the dimension-growth study: `strong` on the
/// anti-diagonal (`j + k = d + 1` in 1-based labels) and everywhere in the
/// last row/column, `weak` elsewhere off the diagonal.
pub fn overlap_pattern_gram(d: usize, strong: f64, weak: f64) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            C64::new(1.0, 0.0)
        } else {
            let (a, b) = (j + 1, k + 1);
            let v = if a + b == d + 1 || a == d || b == d { strong } else { weak };
            C64::new(v, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn params(xi: f64, theta: f64, phi: f64) -> LgTripleParams {
        LgTripleParams { xi, theta, phi }
    }

    #[test]
    fn lg_symmetric_point_has_equal_overlaps() {
        let e = lg_triple(&params(PI / 3.0, 2.0 * PI / 3.0, 2.0 * PI / 3.0), [1.0 / 3.0; 3])
            .unwrap();
        for (j, k) in [(0, 1), (0, 2), (1, 2)] {
            let ov = e.overlap(j, k);
            assert_abs_diff_eq!(ov.re, 0.625, epsilon = 1e-12);
            assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lg_overlaps_match_closed_form() {
        // <psi1|psi3> = cos^2(xi) cos(phi) + sin^2(xi)
        let phi = 0.53 * PI;
        let e = lg_triple(&params(PI / 3.0, 2.0 * PI / 3.0, phi), [0.5, 0.25, 0.25]).unwrap();
        let expect = 0.25 * phi.cos() + 0.75;
        assert_abs_diff_eq!(e.overlap(0, 2).re, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 0.72647, epsilon = 5e-6);
        // <psi2|psi3> = cos^2(xi) cos(theta + phi) + sin^2(xi)
        let expect23 = 0.25 * (2.0 * PI / 3.0 + phi).cos() + 0.75;
        assert_abs_diff_eq!(e.overlap(1, 2).re, expect23, epsilon = 1e-12);
    }

    #[test]
    fn lg_collapsed_states_rejected() {
        let err = lg_triple(&params(PI / 2.0, 1.0, 2.0), [1.0 / 3.0; 3]).unwrap_err();
        assert!(matches!(err, Error::NotDiscriminable { .. }), "got {err}");
        assert!(err.to_string().contains("not USD-discriminable"));
    }

    #[test]
    fn param_ranges_are_open_intervals() {
        assert!(LgTripleParams::new(PI / 3.0, 2.0 * PI / 3.0, 0.53 * PI).is_ok());
        assert!(LgTripleParams::new(PI / 2.0, 1.0, 1.0).is_err());
        assert!(LgTripleParams::new(0.5, PI, 1.0).is_err());
        assert!(LgTripleParams::new(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn gram_of_orthonormal_ensemble_is_identity() {
        let states: Vec<_> = (0..3)
            .map(|j| {
                let mut v = DVector::<C64>::zeros(3);
                v[j] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        let e = StateEnsemble::new(3, states, vec![0.2, 0.3, 0.5]).unwrap();
        let gd = gram_data(&e);
        assert!((gd.gram - DMatrix::<C64>::identity(3, 3)).norm() < 1e-14);
        let q = gd.qutrit.unwrap();
        assert_abs_diff_eq!(q.berry_phase, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gram_berry_phase_from_constructed_overlaps() {
        // Overlaps 0.5 e^{i pi/6} in the cyclic orientation give Phi = pi/2.
        let z = C64::from_polar(0.5, PI / 6.0);
        let gram = DMatrix::from_row_slice(
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
        let q = gram_data(&e).qutrit.unwrap();
        for l in 0..3 {
            assert_abs_diff_eq!(q.magnitudes[l], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(q.phases[l], PI / 6.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(q.berry_phase, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn dual_basis_of_orthonormal_ensemble_is_itself() {
        let states: Vec<_> = (0..2)
            .map(|j| {
                let mut v = DVector::<C64>::zeros(2);
                v[j] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        let e = StateEnsemble::new(2, states.clone(), vec![0.5, 0.5]).unwrap();
        let dual = dual_basis(&e).unwrap();
        for (j, state) in states.iter().enumerate() {
            assert!((dual.vector(j) - state).norm() < 1e-14);
        }
    }

    #[test]
    fn dual_basis_two_state_closed_form() {
        // s = 0.5 real: dual_1 = (psi1 - 0.5 psi2) / 0.75, <dual1|dual1> = 4/3.
        let s = 0.5;
        let psi1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let psi2 = DVector::from_vec(vec![C64::new(s, 0.0), C64::new((1.0f64 - s * s).sqrt(), 0.0)]);
        let e = StateEnsemble::new(2, vec![psi1.clone(), psi2.clone()], vec![0.5, 0.5]).unwrap();
        let dual = dual_basis(&e).unwrap();
        let expect = (psi1 - psi2.scale(0.5)).unscale(0.75);
        assert!((dual.vector(0) - expect).norm() < 1e-13);
        assert_abs_diff_eq!(dual.cross(0, 0).re, 4.0 / 3.0, epsilon = 1e-13);
        // biorthogonality
        for j in 0..2 {
            for k in 0..2 {
                let ip = dual.vector(j).dotc(e.state(k));
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn near_parallel_pair_is_linearly_dependent() {
        let eps = 1e-14f64;
        let s = 1.0 - eps;
        let psi1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let psi2 = DVector::from_vec(vec![
            C64::new(s, 0.0),
            C64::new((1.0f64 - s * s).max(0.0).sqrt(), 0.0),
        ]);
        let e = StateEnsemble::new_unchecked(2, vec![psi1, psi2], vec![0.5, 0.5]);
        let err = dual_basis(&e).unwrap_err();
        assert!(matches!(err, Error::LinearlyDependent { .. }), "got {err}");
        assert!(err.to_string().contains("linearly dependent"));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let e = lg_triple(&params(PI / 3.0, 2.0 * PI / 3.0, 0.6 * PI), [0.5, 0.25, 0.25]).unwrap();
        let text = serde_json::to_string(&e.to_json()).unwrap();
        let back = StateEnsemble::from_json_str(&text).unwrap();
        assert_eq!(back.num_states(), 3);
        for j in 0..3 {
            assert!((back.state(j) - e.state(j)).norm() < 1e-15);
        }
        // first-violation reporting: bad priors
        let mut json = e.to_json();
        json.priors = vec![0.5, 0.5, 0.5];
        let err = StateEnsemble::from_json(&json).unwrap_err();
        assert!(err.to_string().contains("priors"));
    }

    #[test]
    fn pattern_gram_marks_strong_pairs() {
        let g = overlap_pattern_gram(4, 0.3, 0.1);
        let expect_strong = [(0, 3), (1, 2), (1, 3), (2, 3)];
        for j in 0..4 {
            for k in (j + 1)..4 {
                let v = g[(j, k)].re;
                if expect_strong.contains(&(j, k)) {
                    assert_abs_diff_eq!(v, 0.3, epsilon = 1e-15);
                } else {
                    assert_abs_diff_eq!(v, 0.1, epsilon = 1e-15);
                }
            }
        }
    }
}
