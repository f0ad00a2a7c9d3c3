//! Projective realizations of unambiguous measurements on enlarged spaces.
//!
//! Closed forms cover two states (three-dimensional basis, or the boundary
//! basis when one prior dominates) and three states (single extension
//! direction). For arbitrary ensembles the extension coefficients are found
//! numerically: quadratic-penalty Powell sweeps followed by a Gauss-Newton
//! projection onto the orthogonality constraint manifold. All detection
//! vectors keep their first block proportional to the dual basis, which
//! makes false identifications vanish identically; the prepared state only
//! ever reaches its own detector or the inconclusive complement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{dual_basis, LgTripleParams, StateEnsemble};
use crate::error::{Error, Result};
use crate::linalg;
use crate::powell::{self, PowellOptions};
use crate::solver::solve_optimal_alpha;

/// Orthogonality-constraint tolerance for accepted coefficient sets.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// An orthonormal detection basis on the zero-padded enlargement of the
/// state space: one detector per ensemble state plus completion vectors that
/// jointly represent the inconclusive outcome.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    state_dim: usize,
    ext_dim: usize,
    detectors: Vec<DVector<C64>>,
    completion: Vec<DVector<C64>>,
}

impl ProjectiveMeasurement {
    pub fn new(
        state_dim: usize,
        ext_dim: usize,
        detectors: Vec<DVector<C64>>,
        completion: Vec<DVector<C64>>,
    ) -> Self {
        let total = state_dim + ext_dim;
        assert!(detectors.iter().chain(&completion).all(|v| v.len() == total));
        assert_eq!(detectors.len() + completion.len(), total);
        Self { state_dim, ext_dim, detectors, completion }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Number of auxiliary directions appended to the state space.
    pub fn ext_dim(&self) -> usize {
        self.ext_dim
    }

    pub fn total_dim(&self) -> usize {
        self.state_dim + self.ext_dim
    }

    pub fn detectors(&self) -> &[DVector<C64>] {
        &self.detectors
    }

    pub fn completion(&self) -> &[DVector<C64>] {
        &self.completion
    }

    /// Zero-padding embedding of a state into the enlarged space.
    pub fn embed(&self, psi: &DVector<C64>) -> DVector<C64> {
        assert_eq!(psi.len(), self.state_dim);
        let mut out = DVector::<C64>::zeros(self.total_dim());
        out.rows_mut(0, self.state_dim).copy_from(psi);
        out
    }

    /// `|<D_j|embed(psi)>|^2`.
    pub fn conclusive_probability(&self, psi: &DVector<C64>, j: usize) -> f64 {
        self.detectors[j].dotc(&self.embed(psi)).norm_sqr()
    }

    /// `sum_j q_j |<D_j|embed(psi_j)>|^2`.
    pub fn success_prob(&self, ensemble: &StateEnsemble) -> f64 {
        ensemble
            .states()
            .iter()
            .zip(ensemble.priors())
            .enumerate()
            .map(|(j, (psi, q))| q * self.conclusive_probability(psi, j))
            .sum()
    }

    /// Largest deviation of the full basis Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let all: Vec<&DVector<C64>> = self.detectors.iter().chain(&self.completion).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let g = a.dotc(b);
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// `max_{y != x} |<D_y|embed(psi_x)>|^2` over the ensemble.
    pub fn unambiguity_error(&self, ensemble: &StateEnsemble) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, psi) in ensemble.states().iter().enumerate() {
            for y in 0..self.detectors.len() {
                if y != x {
                    worst = worst.max(self.conclusive_probability(psi, y));
                }
            }
        }
        worst
    }

    pub fn to_json(&self) -> MeasurementJson {
        MeasurementJson {
            state_dim: self.state_dim,
            ext_dim: self.ext_dim,
            detectors: self.detectors.iter().map(linalg::vector_to_pairs).collect(),
            completion: self.completion.iter().map(linalg::vector_to_pairs).collect(),
        }
    }

    pub fn from_json(json: &MeasurementJson) -> Result<Self> {
        let total = json.state_dim + json.ext_dim;
        let parse = |vs: &Vec<Vec<[f64; 2]>>| -> Result<Vec<DVector<C64>>> {
            vs.iter()
                .map(|v| {
                    if v.len() != total {
                        return Err(Error::InvalidInput(format!(
                            "measurement vector has dimension {}, expected {total}",
                            v.len()
                        )));
                    }
                    Ok(linalg::pairs_to_vector(v))
                })
                .collect()
        };
        let detectors = parse(&json.detectors)?;
        let completion = parse(&json.completion)?;
        if detectors.len() + completion.len() != total {
            return Err(Error::InvalidInput(
                "detector plus completion count must equal the total dimension".into(),
            ));
        }
        Ok(Self { state_dim: json.state_dim, ext_dim: json.ext_dim, detectors, completion })
    }
}

/// Wire format for measurements: vectors as `[re, im]` pair arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementJson {
    pub state_dim: usize,
    pub ext_dim: usize,
    pub detectors: Vec<Vec<[f64; 2]>>,
    pub completion: Vec<Vec<[f64; 2]>>,
}

/// Two-state projective measurement.
///
/// In the interior regime `s < sqrt(q2/q1) < 1/s` this is the
/// three-dimensional basis `D_y ~ dual_y + {mu, nu} |l2>` reaching the
/// Ivanovic-Dieks-Peres success probability. Otherwise the better state is
/// kept (`D ~ dual`), the other state becomes the inconclusive direction,
/// and the second detector points along the never-firing extension axis.
pub fn extend_2(ensemble: &StateEnsemble) -> Result<ProjectiveMeasurement> {
    if ensemble.num_states() != 2 || ensemble.dim() != 2 {
        return Err(Error::InvalidInput("extend_2 needs d = 2 qubit states (n = 2)".into()));
    }
    let overlap = ensemble.overlap(0, 1);
    let s = overlap.norm();
    if s >= 1.0 - 1e-14 {
        return Err(Error::InvalidInput("identical states (s = 1) cannot be discriminated".into()));
    }
    let (q1, q2) = (ensemble.priors()[0], ensemble.priors()[1]);

    if s < 1e-14 {
        // Already orthogonal: measure in place, no extension.
        let detectors = vec![ensemble.state(0).clone(), ensemble.state(1).clone()];
        return Ok(ProjectiveMeasurement::new(2, 0, detectors, Vec::new()));
    }

    // Align the global phase of psi2 so the overlap is real nonnegative; the
    // resulting measurement discriminates the original ensemble with the
    // same statistics.
    let phase = overlap / C64::new(s, 0.0);
    let aligned = StateEnsemble::new_unchecked(
        2,
        vec![ensemble.state(0).clone(), ensemble.state(1) * phase.conj()],
        ensemble.priors().to_vec(),
    );
    let dual = dual_basis(&aligned)?;
    let interior = s * s * q1 < q2 && s * s * q2 < q1;
    let mu_sq = if interior && q1 > 0.0 && q2 > 0.0 {
        let denom = q1 - s * s * q2;
        s * (q1 * q2).sqrt() / denom - s * s * (q1 - q2) / ((1.0 - s * s) * denom)
    } else {
        0.0
    };

    let total = 3;
    let embed = |v: &DVector<C64>, extra: f64| -> DVector<C64> {
        let mut out = DVector::<C64>::zeros(total);
        out.rows_mut(0, 2).copy_from(v);
        out[2] = C64::new(extra, 0.0);
        out
    };

    let mut detectors = if interior && mu_sq > 1e-28 {
        let mu = mu_sq.sqrt();
        let nu = s / ((1.0 - s * s) * mu);
        let d1 = embed(dual.vector(0), mu);
        let d2 = embed(dual.vector(1), nu);
        vec![d1.clone().unscale(d1.norm()), d2.clone().unscale(d2.norm())]
    } else {
        // Boundary: keep the likelier state, park the other detector on the
        // extension axis where it can never fire.
        let keep = if q1 >= q2 { 0 } else { 1 };
        let kept = embed(dual.vector(keep), 0.0);
        let kept = kept.clone().unscale(kept.norm());
        let mut axis = DVector::<C64>::zeros(total);
        axis[2] = C64::new(1.0, 0.0);
        if keep == 0 {
            vec![kept, axis]
        } else {
            vec![axis, kept]
        }
    };
    for d in &mut detectors {
        linalg::gauge_fix(d);
    }
    let completion = linalg::orthonormal_complement(&detectors, total);
    Ok(ProjectiveMeasurement::new(2, 1, detectors, completion))
}

/// Coefficients of the single-extension qutrit construction.
#[derive(Debug, Clone, Serialize)]
pub struct Extension3Coefficients {
    /// `kappa = sqrt(-c12 c13 / c23)` with `c_jk = <dual_j|dual_k>`.
    pub kappa: f64,
    /// Extension amplitudes `(a1, a2, a3) = (kappa, kappa c23/c13, kappa c23/c12)`.
    pub a: [f64; 3],
    /// The Laguerre-Gaussian shape functions, when built from that family.
    pub lg: Option<LgCoefficients>,
}

/// The closed-form shape functions of the Laguerre-Gaussian family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LgCoefficients {
    pub gamma: f64,
    pub lambda: f64,
    pub omega: f64,
}

/// Closed-form four-dimensional measurement for three states (`n = 3`).
///
/// Requires real dual-basis cross products with a sign pattern that keeps
/// `kappa` real; otherwise the numeric extension must be used. The
/// conclusive probabilities realize the first-type surface weights.
pub fn extend_3_closed_form(
    ensemble: &StateEnsemble,
) -> Result<(ProjectiveMeasurement, Extension3Coefficients)> {
    if ensemble.num_states() != 3 || ensemble.dim() != 3 {
        return Err(Error::InvalidInput("extend_3_closed_form needs d = 3, n = 3".into()));
    }
    let dual = dual_basis(ensemble)?;
    let cross = [dual.cross(0, 1), dual.cross(0, 2), dual.cross(1, 2)];
    let scale = cross.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
    if cross.iter().any(|c| c.im.abs() > 1e-10 * scale) {
        return Err(Error::ClosedFormInapplicable {
            reason: "dual-basis cross products are not real".into(),
        });
    }
    let [c12, c13, c23] = [cross[0].re, cross[1].re, cross[2].re];
    for (label, c) in [("<dual1|dual2>", c12), ("<dual1|dual3>", c13), ("<dual2|dual3>", c23)] {
        if c.abs() < 1e-12 * scale {
            return Err(Error::ClosedFormInapplicable {
                reason: format!("vanishing cross product {label} = {c:.3e}"),
            });
        }
    }
    let radicand = -c12 * c13 / c23;
    if radicand < 0.0 {
        return Err(Error::ClosedFormInapplicable {
            reason: format!("negative radicand {radicand:.6e} for kappa"),
        });
    }
    let kappa = radicand.sqrt();
    let a = [kappa, kappa * c23 / c13, kappa * c23 / c12];

    let total = 4;
    let mut detectors: Vec<DVector<C64>> = (0..3)
        .map(|j| {
            let mut v = DVector::<C64>::zeros(total);
            v.rows_mut(0, 3).copy_from(dual.vector(j));
            v[3] = C64::new(a[j], 0.0);
            let norm = v.norm();
            v.unscale(norm)
        })
        .collect();
    for d in &mut detectors {
        linalg::gauge_fix(d);
    }
    let completion = linalg::orthonormal_complement(&detectors, total);
    let measurement = ProjectiveMeasurement::new(3, 1, detectors, completion);
    Ok((measurement, Extension3Coefficients { kappa, a, lg: None }))
}

/// Result of evaluating the Laguerre-Gaussian closed-form detection vectors.
#[derive(Debug, Clone)]
pub struct LgClosedFormVectors {
    /// Normalized four-dimensional detection vectors `D1, D2, D3`.
    pub vectors: [DVector<C64>; 3],
    pub coefficients: LgCoefficients,
    pub omega_radicand: f64,
}

/// Explicit detection vectors of the Laguerre-Gaussian family, written with
/// the shape functions `Gamma`, `Lambda`, `Omega` of the angles
/// `(theta, phi, xi)`. Agrees with [`extend_3_closed_form`] applied to
/// [`crate::ensemble::lg_triple`] up to a global sign per vector.
///
/// `Lambda` and `Omega` are symmetric under swapping `theta` and `phi`;
/// `Gamma` is not. The third vector is the mirror image (`l1 -> -l1`) of the
/// second with the two angles exchanged, which is what the exchange symmetry
/// `psi_2 <-> psi_3` of the state family dictates, so `D3` carries
/// `Gamma(phi, theta, xi)` and the theta half-angle cotangent.
pub fn lg_closed_form_vectors(params: &LgTripleParams) -> Result<LgClosedFormVectors> {
    let ct = 1.0 / (params.theta / 2.0).tan();
    let cp = 1.0 / (params.phi / 2.0).tan();
    let sec = 1.0 / params.xi.cos();
    let csc = 1.0 / params.xi.sin();
    let sec2 = sec * sec;
    let csc2 = csc * csc;
    let cot2 = (params.xi.cos() / params.xi.sin()).powi(2);

    let gamma = cp * sec2 - ct * csc2 + ct * ct * cp * csc2 * sec2;
    let gamma_swapped = ct * sec2 - cp * csc2 + cp * cp * ct * csc2 * sec2;
    let lambda = -1.0 + ct * cp * csc2;
    let brace1 = cp * (1.0 + ct * ct * csc2) - ct * cot2;
    let brace2 = ct * (1.0 + cp * cp * csc2) - cp * cot2;
    let omega_radicand = -(sec2 * brace1 * brace2) / lambda;
    if omega_radicand < 0.0 {
        return Err(Error::NegativeRadicand { radicand: omega_radicand });
    }
    let omega = omega_radicand.sqrt();

    let re = |x: f64| C64::new(x, 0.0);
    let d1 = DVector::from_vec(vec![
        re((1.0 + ct * cp) * sec),
        re((-ct + cp) * sec),
        re((1.0 - ct * cp) * csc),
        re(omega),
    ]);
    let d2 = DVector::from_vec(vec![
        re(gamma * cp * sec),
        re(-gamma * sec),
        re(-gamma * cp * csc),
        re(lambda * omega * sec2),
    ]);
    let d3 = DVector::from_vec(vec![
        re(gamma_swapped * ct * sec),
        re(gamma_swapped * sec),
        re(-gamma_swapped * ct * csc),
        re(lambda * omega * sec2),
    ]);
    let normalize = |v: DVector<C64>| {
        let n = v.norm();
        v.unscale(n)
    };
    Ok(LgClosedFormVectors {
        vectors: [normalize(d1), normalize(d2), normalize(d3)],
        coefficients: LgCoefficients { gamma, lambda, omega },
        omega_radicand,
    })
}

/// Shape functions specialized to `theta = 2 pi / 3`, `xi = pi / 3`.
/// Returns `(gamma, lambda, omega_radicand)`.
pub fn lg_simplified_coefficients(phi: f64) -> (f64, f64, f64) {
    let c = 1.0 / (phi / 2.0).tan();
    let rt3 = 3.0f64.sqrt();
    let gamma = 4.0 / 9.0 * (13.0 * c - rt3);
    let lambda = 4.0 * c / (3.0 * rt3) - 1.0;
    let omega_radicand = (4.0 / 9.0)
        * (9.0 - 42.0 * rt3 * c + 51.0 * c * c - 52.0 * rt3 * c * c * c)
        / (4.0 * rt3 * c - 9.0);
    (gamma, lambda, omega_radicand)
}

/// Real extension amplitudes `a_j^(k)`, stored as a `d x d_ext` matrix.
#[derive(Debug, Clone)]
pub struct ExtensionCoefficients {
    pub coeffs: DMatrix<f64>,
}

impl Serialize for ExtensionCoefficients {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.coeffs.nrows())
            .map(|j| (0..self.coeffs.ncols()).map(|k| self.coeffs[(j, k)]).collect())
            .collect();
        rows.serialize(ser)
    }
}

impl ExtensionCoefficients {
    /// `max_{j<k} |<dual_j|dual_k> + sum_m a_j^(m) a_k^(m)|` against the
    /// (phase-aligned, real) dual Gram matrix.
    pub fn max_constraint_residual(&self, dual_gram: &DMatrix<f64>) -> f64 {
        let d = self.coeffs.nrows();
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for k in (j + 1)..d {
                let dot: f64 =
                    (0..self.coeffs.ncols()).map(|m| self.coeffs[(j, m)] * self.coeffs[(k, m)]).sum();
                worst = worst.max((dual_gram[(j, k)] + dot).abs());
            }
        }
        worst
    }
}

/// Restart schedule and reproducibility knobs for [`extend_general`].
#[derive(Debug, Clone, Copy)]
pub struct ExtendOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Optional early stop: halt the restart loop once the achieved success
    /// probability is within `tol` of `p_optimal`.
    pub target: Option<ExtendTarget>,
}

#[derive(Debug, Clone, Copy)]
pub struct ExtendTarget {
    pub p_optimal: f64,
    pub tol: f64,
}

impl ExtendOptions {
    /// Restart counts follow the size of the search space: 50 for `d <= 4`,
    /// 200 beyond.
    pub fn defaults_for(d: usize, seed: u64) -> Self {
        Self { restarts: if d <= 4 { 50 } else { 200 }, seed, target: None }
    }
}

/// Successful output of [`extend_general`].
#[derive(Debug, Clone)]
pub struct GeneralExtension {
    pub measurement: ProjectiveMeasurement,
    pub coefficients: ExtensionCoefficients,
    pub p_success: f64,
    /// Restart index that produced the winner.
    pub winning_restart: usize,
}

/// Numeric extension of arbitrary ensembles with `d_ext` auxiliary
/// directions and real coefficients.
///
/// Maximizes `sum_j q_j / (<dual_j|dual_j> + |a_j|^2)` subject to the
/// pairwise orthogonality constraints, taking the best feasible outcome of
/// `opts.restarts` independent runs (ties break toward the lowest restart
/// index; results are deterministic for a fixed seed and independent of
/// execution order).
pub fn extend_general(
    ensemble: &StateEnsemble,
    d_ext: usize,
    opts: &ExtendOptions,
) -> Result<GeneralExtension> {
    let d = ensemble.num_states();
    let n = ensemble.dim();
    let dual = dual_basis(ensemble)?;
    let (phases, gr) = align_dual_gram(&dual.gram_inverse)?;
    let rotated: Vec<DVector<C64>> = (0..d)
        .map(|j| dual.vector(j) * C64::from_polar(1.0, phases[j]))
        .collect();

    let off_scale = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .map(|(j, k)| gr[(j, k)].abs())
        .fold(0.0f64, f64::max);

    if d_ext == 0 {
        if off_scale > CONSTRAINT_TOL {
            return Err(Error::ExtensionTooSmall { d_ext: 0 });
        }
        let coeffs = ExtensionCoefficients { coeffs: DMatrix::zeros(d, 0) };
        let measurement = assemble(n, 0, &rotated, &coeffs);
        let p_success = measurement.success_prob(ensemble);
        return Ok(GeneralExtension { measurement, coefficients: coeffs, p_success, winning_restart: 0 });
    }

    // Deterministic first restart: factor diag(1/alpha*) - gr at the POVM
    // optimum; when its rank fits within d_ext this lands on the optimum
    // immediately and the local refinement only has to polish.
    let smart_init = solve_optimal_alpha(ensemble).ok().map(|report| {
        rank_truncated_init(&gr, &report.alpha_star.alphas, d_ext)
    });

    let priors = ensemble.priors().to_vec();
    let nvars = d * d_ext;
    let sigma = (off_scale.max(0.05)).sqrt();

    let run_restart = |r: usize| -> Option<(f64, DMatrix<f64>)> {
        let init = if r == 0 {
            smart_init.clone().unwrap_or_else(|| random_init(d, d_ext, sigma, opts.seed, r))
        } else {
            random_init(d, d_ext, sigma, opts.seed, r)
        };
        refine_candidate(&gr, &priors, init, nvars)
    };

    type RestartOutcome = (usize, Option<(f64, DMatrix<f64>)>);
    let mut best: Option<(f64, usize, DMatrix<f64>)> = None;
    let chunk = 16usize;
    let mut r0 = 0usize;
    'outer: while r0 < opts.restarts {
        let hi = (r0 + chunk).min(opts.restarts);
        let results: Vec<RestartOutcome> =
            (r0..hi).into_par_iter().map(|r| (r, run_restart(r))).collect();
        for (r, res) in results {
            if let Some((p, a)) = res {
                let better = match &best {
                    None => true,
                    Some((bp, br, _)) => p > *bp + 1e-12 || (p > *bp - 1e-12 && r < *br),
                };
                if better {
                    best = Some((p, r, a));
                }
            }
        }
        if let (Some(target), Some((p, _, _))) = (opts.target, best.as_ref()) {
            if *p >= target.p_optimal - target.tol {
                break 'outer;
            }
        }
        r0 = hi;
    }

    let (p_success, winning_restart, coeffs) =
        best.ok_or(Error::ExtensionTooSmall { d_ext })?;
    let coefficients = ExtensionCoefficients { coeffs };
    let measurement = assemble(n, d_ext, &rotated, &coefficients);
    Ok(GeneralExtension { measurement, coefficients, p_success, winning_restart })
}

/// Per-state phases making the dual Gram matrix real, found by walking a
/// spanning tree of its significant off-diagonal entries. Entries that are
/// already real (of either sign) are left untouched. Fails when the residual
/// imaginary part cannot be removed (nonzero Berry phase).
fn align_dual_gram(k: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = k.nrows();
    let scale = linalg::max_abs(k).max(1.0);
    let mut phases = vec![0.0f64; d];
    let mut visited = vec![false; d];
    for root in 0..d {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = vec![root];
        while let Some(j) = queue.pop() {
            for m in 0..d {
                if !visited[m] && k[(j, m)].norm() > 1e-12 * scale {
                    // rotate onto the real axis by the smallest angle, so a
                    // real negative entry keeps its sign
                    let raw = k[(j, m)].arg();
                    let reduced = raw - std::f64::consts::PI * (raw / std::f64::consts::PI).round();
                    phases[m] = phases[j] - reduced;
                    visited[m] = true;
                    queue.push(m);
                }
            }
        }
    }
    let mut residual: f64 = 0.0;
    let mut real = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        for m in 0..d {
            let rotated = k[(j, m)] * C64::from_polar(1.0, phases[m] - phases[j]);
            residual = residual.max(rotated.im.abs());
            real[(j, m)] = rotated.re;
        }
    }
    if residual > 1e-10 * scale {
        return Err(Error::ComplexDualGram { residual });
    }
    Ok((phases, real))
}

/// Eigenfactor of `diag(1/alpha) - gr` truncated to the leading `d_ext`
/// directions; exact whenever the matrix rank fits.
fn rank_truncated_init(gr: &DMatrix<f64>, alphas: &[f64], d_ext: usize) -> DMatrix<f64> {
    let d = gr.nrows();
    let mut r = -gr.clone();
    for j in 0..d {
        r[(j, j)] += 1.0 / alphas[j].clamp(1e-8, 1.0);
    }
    let se = r.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let mut coeffs = DMatrix::<f64>::zeros(d, d_ext);
    for (col, &idx) in order.iter().take(d_ext.min(d)).enumerate() {
        let lambda = se.eigenvalues[idx].max(0.0).sqrt();
        for j in 0..d {
            coeffs[(j, col)] = lambda * se.eigenvectors[(j, idx)];
        }
    }
    coeffs
}

fn random_init(d: usize, d_ext: usize, sigma: f64, seed: u64, restart: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, restart as u64, 0x5eed));
    DMatrix::from_fn(d, d_ext, |_, _| {
        let u: f64 = rng.random();
        sigma * 2.0 * (u - 0.5)
    })
}

/// SplitMix64-style seed derivation; documented so that parallel execution
/// order can never change the streams.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut x = master
        .wrapping_add(a.wrapping_mul(GOLDEN))
        .wrapping_add(b.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Penalty-Powell rounds followed by a Gauss-Newton projection onto the
/// constraint manifold; returns the exact success probability of the
/// feasible point, or `None` when the polish cannot reach feasibility.
fn refine_candidate(
    gr: &DMatrix<f64>,
    priors: &[f64],
    init: DMatrix<f64>,
    nvars: usize,
) -> Option<(f64, DMatrix<f64>)> {
    let d = gr.nrows();
    let d_ext = init.ncols();
    let flatten = |m: &DMatrix<f64>| -> Vec<f64> { m.as_slice().to_vec() };
    let unflatten = |v: &[f64]| -> DMatrix<f64> { DMatrix::from_column_slice(d, d_ext, v) };

    let p_of = |a: &DMatrix<f64>| -> f64 {
        (0..d)
            .map(|j| {
                let norm_sq: f64 = (0..d_ext).map(|m| a[(j, m)] * a[(j, m)]).sum();
                priors[j] / (gr[(j, j)] + norm_sq)
            })
            .sum()
    };
    let constraint_sq = |a: &DMatrix<f64>| -> f64 {
        let mut acc = 0.0;
        for j in 0..d {
            for k in (j + 1)..d {
                let dot: f64 = (0..d_ext).map(|m| a[(j, m)] * a[(k, m)]).sum();
                let c = gr[(j, k)] + dot;
                acc += c * c;
            }
        }
        acc
    };

    let mut current = init;
    // An init that is already essentially feasible (the rank-truncated
    // optimum) goes straight to the projection; the penalty sweeps are for
    // genuinely infeasible starting points.
    if constraint_sq(&current).sqrt() > 1e-6 {
        let mut weight = 1e2;
        for _ in 0..6 {
            let objective = |x: &[f64]| -> f64 {
                let a = unflatten(x);
                -p_of(&a) + weight * constraint_sq(&a)
            };
            let opts = PowellOptions { ftol: 1e-11, max_sweeps: 40.max(2 * nvars), initial_step: 0.2 };
            let result = powell::minimize(objective, &flatten(&current), &opts);
            current = unflatten(&result.x);
            weight *= 10.0;
        }
    }
    let polished = project_to_constraints(gr, current)?;
    Some((p_of(&polished), polished))
}

/// Gauss-Newton iteration on the orthogonality constraints.
fn project_to_constraints(gr: &DMatrix<f64>, mut a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = gr.nrows();
    let d_ext = a.ncols();
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|j| ((j + 1)..d).map(move |k| (j, k))).collect();
    let nc = pairs.len();
    if nc == 0 || d_ext == 0 {
        let ok = pairs.iter().all(|&(j, k)| gr[(j, k)].abs() <= CONSTRAINT_TOL);
        return ok.then_some(a);
    }
    let nv = d * d_ext;
    for _ in 0..80 {
        let mut c = DVector::<f64>::zeros(nc);
        for (idx, &(j, k)) in pairs.iter().enumerate() {
            let dot: f64 = (0..d_ext).map(|m| a[(j, m)] * a[(k, m)]).sum();
            c[idx] = gr[(j, k)] + dot;
        }
        if c.amax() < 1e-13 {
            return Some(a);
        }
        let mut jac = DMatrix::<f64>::zeros(nc, nv);
        for (idx, &(j, k)) in pairs.iter().enumerate() {
            for m in 0..d_ext {
                jac[(idx, j + m * d)] += a[(k, m)];
                jac[(idx, k + m * d)] += a[(j, m)];
            }
        }
        // minimum-norm step: J^T (J J^T + reg)^{-1} c
        let jjt = &jac * jac.transpose();
        let mut reg = jjt;
        for i in 0..nc {
            reg[(i, i)] += 1e-12;
        }
        let rhs = reg.cholesky()?.solve(&c);
        let step = jac.transpose() * rhs;
        for (i, s) in step.iter().enumerate() {
            a[(i % d, i / d)] -= s;
        }
    }
    // final feasibility verdict
    let worst = pairs
        .iter()
        .map(|&(j, k)| {
            let dot: f64 = (0..d_ext).map(|m| a[(j, m)] * a[(k, m)]).sum();
            (gr[(j, k)] + dot).abs()
        })
        .fold(0.0f64, f64::max);
    (worst <= CONSTRAINT_TOL).then_some(a)
}

/// Detection vectors from rotated duals plus extension rows, with the
/// orthonormal completion of the remaining directions.
fn assemble(
    n: usize,
    d_ext: usize,
    rotated_duals: &[DVector<C64>],
    coefficients: &ExtensionCoefficients,
) -> ProjectiveMeasurement {
    let d = rotated_duals.len();
    let total = n + d_ext;
    let mut detectors: Vec<DVector<C64>> = (0..d)
        .map(|j| {
            let mut v = DVector::<C64>::zeros(total);
            v.rows_mut(0, n).copy_from(&rotated_duals[j]);
            for m in 0..d_ext {
                v[n + m] = C64::new(coefficients.coeffs[(j, m)], 0.0);
            }
            let norm = v.norm();
            v.unscale(norm)
        })
        .collect();
    for dvec in &mut detectors {
        linalg::gauge_fix(dvec);
    }
    let completion = linalg::orthonormal_complement(&detectors, total);
    ProjectiveMeasurement::new(n, d_ext, detectors, completion)
}

/// One point of the dimension-growth curve.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionCurvePoint {
    pub ext_dim: usize,
    /// Best feasible success probability found, `None` when no coefficient
    /// set satisfied the constraints at this extension dimension.
    pub p_success: Option<f64>,
    /// `p_optimal - p_success`.
    pub gap: Option<f64>,
}

/// Result of the minimal-extension-dimension search.
#[derive(Debug, Clone, Serialize)]
pub struct MinExtensionReport {
    /// Smallest extension dimension whose gap fell within tolerance; `None`
    /// when the cap `d(d+1)/2` on the total dimension was reached first.
    pub min_ext_dim: Option<usize>,
    pub curve: Vec<DimensionCurvePoint>,
    pub p_optimal: f64,
    /// Largest extension dimension that was (or would have been) tried.
    pub ext_dim_cap: usize,
}

/// Sweep extension dimensions upward until the projective construction
/// reaches the POVM optimum within `tol`.
pub fn min_extension_dim(
    ensemble: &StateEnsemble,
    tol: f64,
    opts: &ExtendOptions,
) -> Result<MinExtensionReport> {
    let d = ensemble.num_states();
    let n = ensemble.dim();
    let p_optimal = solve_optimal_alpha(ensemble)?.p_success;
    let ext_dim_cap = (d * (d + 1) / 2).saturating_sub(n);
    let mut curve = Vec::new();
    for d_ext in 0..=ext_dim_cap {
        let local = ExtendOptions {
            target: Some(ExtendTarget { p_optimal, tol }),
            ..*opts
        };
        match extend_general(ensemble, d_ext, &local) {
            Ok(found) => {
                let gap = p_optimal - found.p_success;
                curve.push(DimensionCurvePoint {
                    ext_dim: d_ext,
                    p_success: Some(found.p_success),
                    gap: Some(gap),
                });
                if gap <= tol {
                    return Ok(MinExtensionReport {
                        min_ext_dim: Some(d_ext),
                        curve,
                        p_optimal,
                        ext_dim_cap,
                    });
                }
            }
            Err(Error::ExtensionTooSmall { .. }) => {
                curve.push(DimensionCurvePoint { ext_dim: d_ext, p_success: None, gap: None });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MinExtensionReport { min_ext_dim: None, curve, p_optimal, ext_dim_cap })
}
