//! Photon-counting simulation: outcome distributions, Poissonian coincidence
//! counts, Monte Carlo sweeps with error bars, and the four-dimensional MUB
//! crosstalk/visibility check.
//!
//! Counts are drawn as independent Poisson variables per (prepared state,
//! outcome) cell, matching heralded-coincidence statistics; row totals
//! therefore fluctuate. Every randomized routine derives its streams from a
//! master seed with [`crate::naimark::derive_seed`], so results do not
//! depend on execution order or parallelism.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{lg_triple, LgTripleParams, StateEnsemble};
use crate::error::{Error, Result};
use crate::naimark::{derive_seed, extend_3_closed_form, ProjectiveMeasurement};

/// Probabilities below this are clamped to exact zero; unambiguous
/// constructions make the error cells vanish to roundoff anyway.
pub const PROB_SNAP: f64 = 1e-14;

/// Outcome probabilities per prepared state: `d` conclusive columns followed
/// by one pooled inconclusive column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    /// `probs[x][y]`, row-stochastic.
    pub probs: Vec<Vec<f64>>,
}

impl OutcomeDistribution {
    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    /// Conclusive outcomes per row (the final column is inconclusive).
    pub fn num_conclusive(&self) -> usize {
        self.probs.first().map_or(0, |r| r.len() - 1)
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.probs
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `p[x][y] = |<D_y|embed(psi_x)>|^2` with the inconclusive column pooling
/// everything the detectors miss.
pub fn outcome_probs(
    measurement: &ProjectiveMeasurement,
    ensemble: &StateEnsemble,
) -> Result<OutcomeDistribution> {
    if measurement.state_dim() != ensemble.dim() {
        return Err(Error::LengthMismatch {
            expected: measurement.state_dim(),
            got: ensemble.dim(),
        });
    }
    if measurement.detectors().len() != ensemble.num_states() {
        return Err(Error::LengthMismatch {
            expected: measurement.detectors().len(),
            got: ensemble.num_states(),
        });
    }
    let d = ensemble.num_states();
    let probs = ensemble
        .states()
        .iter()
        .map(|psi| {
            let mut row: Vec<f64> = (0..d)
                .map(|y| {
                    let p = measurement.conclusive_probability(psi, y);
                    if p < PROB_SNAP {
                        0.0
                    } else {
                        p
                    }
                })
                .collect();
            let conclusive: f64 = row.iter().sum();
            let mut inconclusive = (1.0 - conclusive).max(0.0);
            if inconclusive < PROB_SNAP {
                inconclusive = 0.0;
            }
            row.push(inconclusive);
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            row
        })
        .collect();
    Ok(OutcomeDistribution { probs })
}

/// Simulated coincidence counts, one Poisson draw per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountTable {
    /// `counts[x][y]`, same layout as [`OutcomeDistribution`].
    pub counts: Vec<Vec<u64>>,
    /// Poisson mean of a full row.
    pub mean_total: f64,
    pub rng_seed: u64,
}

impl CountTable {
    pub fn row_total(&self, x: usize) -> u64 {
        self.counts[x].iter().sum()
    }
}

/// Draw `N[x][y] ~ Poisson(mean_total * p[x][y])`, deterministically for a
/// fixed seed. Zero-probability cells never register counts.
pub fn simulate_counts(
    dist: &OutcomeDistribution,
    mean_total: f64,
    rng_seed: u64,
) -> Result<CountTable> {
    if mean_total.is_nan() || mean_total <= 0.0 {
        return Err(Error::InvalidInput(format!("mean_total must be positive, got {mean_total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let counts = dist
        .probs
        .iter()
        .map(|row| {
            row.iter()
                .map(|&p| {
                    let mean = mean_total * p;
                    if mean <= 0.0 {
                        0u64
                    } else {
                        let sample: f64 = Poisson::new(mean)
                            .expect("positive Poisson mean")
                            .sample(&mut rng);
                        sample as u64
                    }
                })
                .collect()
        })
        .collect();
    Ok(CountTable { counts, mean_total, rng_seed })
}

/// Prior-weighted empirical success/error/failure decomposition of a count
/// table. The three numbers sum to one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmpiricalStats {
    pub p_success: f64,
    pub p_error: f64,
    pub p_failure: f64,
}

pub fn empirical_stats(counts: &CountTable, priors: &[f64]) -> Result<EmpiricalStats> {
    let d = counts.counts.len();
    if priors.len() != d {
        return Err(Error::LengthMismatch { expected: d, got: priors.len() });
    }
    let mut stats = EmpiricalStats { p_success: 0.0, p_error: 0.0, p_failure: 0.0 };
    for (x, row) in counts.counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(Error::ZeroRowCounts { state: x });
        }
        let total = total as f64;
        let conclusive = row.len() - 1;
        let success = row[x] as f64 / total;
        let error: f64 =
            row[..conclusive].iter().enumerate().filter(|(y, _)| *y != x).map(|(_, &c)| c as f64).sum::<f64>()
                / total;
        let failure = row[conclusive] as f64 / total;
        stats.p_success += priors[x] * success;
        stats.p_error += priors[x] * error;
        stats.p_failure += priors[x] * failure;
    }
    Ok(stats)
}

/// A labeled prior assignment for sweep outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorSet {
    pub label: String,
    pub values: [f64; 3],
}

/// Monte Carlo sweep configuration over the Laguerre-Gaussian family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub xi: f64,
    pub theta: f64,
    pub phi_values: Vec<f64>,
    pub prior_sets: Vec<PriorSet>,
    pub mean_total: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl SweepConfig {
    /// The published sweep: thirteen evenly spaced points on
    /// `[0.5 pi, 0.9 pi]`, `theta = 2 pi / 3`, `xi = pi / 3`, and the three
    /// prior assignments of the success-probability figure.
    pub fn paper_defaults(mean_total: f64, repetitions: usize, seed: u64) -> Self {
        let pi = std::f64::consts::PI;
        let phi_values = (0..13).map(|i| (0.5 + 0.4 * i as f64 / 12.0) * pi).collect();
        Self {
            xi: pi / 3.0,
            theta: 2.0 * pi / 3.0,
            phi_values,
            prior_sets: vec![
                PriorSet { label: "1/3-1/3-1/3".into(), values: [1.0 / 3.0; 3] },
                PriorSet {
                    label: "5/12-7/24-7/24".into(),
                    values: [5.0 / 12.0, 7.0 / 24.0, 7.0 / 24.0],
                },
                PriorSet { label: "1/2-1/4-1/4".into(), values: [0.5, 0.25, 0.25] },
            ],
            mean_total,
            repetitions,
            seed,
        }
    }
}

/// One sweep point: theory plus Monte Carlo mean and standard deviation over
/// the repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub phi: f64,
    pub priors_label: String,
    pub p_success_theory: f64,
    pub p_success_mc_mean: f64,
    pub p_success_mc_std: f64,
    pub p_error_mc_mean: f64,
    pub p_error_mc_std: f64,
    /// Set when only one repetition was requested; the std fields are zero.
    pub single_sample: bool,
    /// Synthesis failure for this point, if any; statistics are zeroed.
    pub failure: Option<String>,
}

/// Sweep the success probability over `phi` and the prior sets, attaching
/// Poissonian Monte Carlo statistics. Per-point failures are recorded and
/// the sweep continues.
pub fn monte_carlo_sweep(config: &SweepConfig) -> Vec<SweepPoint> {
    let tasks: Vec<(usize, f64, PriorSet)> = config
        .phi_values
        .iter()
        .flat_map(|&phi| config.prior_sets.iter().map(move |ps| (phi, ps.clone())))
        .enumerate()
        .map(|(i, (phi, ps))| (i, phi, ps))
        .collect();
    tasks
        .into_par_iter()
        .map(|(index, phi, priors)| sweep_point(config, index, phi, priors))
        .collect()
}

fn sweep_point(config: &SweepConfig, index: usize, phi: f64, priors: PriorSet) -> SweepPoint {
    let fail = |message: String| SweepPoint {
        phi,
        priors_label: priors.label.clone(),
        p_success_theory: f64::NAN,
        p_success_mc_mean: f64::NAN,
        p_success_mc_std: f64::NAN,
        p_error_mc_mean: f64::NAN,
        p_error_mc_std: f64::NAN,
        single_sample: config.repetitions <= 1,
        failure: Some(message),
    };
    let params = LgTripleParams { xi: config.xi, theta: config.theta, phi };
    let ensemble = match lg_triple(&params, priors.values) {
        Ok(e) => e,
        Err(e) => return fail(e.to_string()),
    };
    let measurement = match extend_3_closed_form(&ensemble) {
        Ok((m, _)) => m,
        Err(e) => return fail(e.to_string()),
    };
    let dist = match outcome_probs(&measurement, &ensemble) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string()),
    };
    let theory = measurement.success_prob(&ensemble);

    let mut successes = Vec::with_capacity(config.repetitions);
    let mut errors = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let seed = derive_seed(config.seed, index as u64, rep as u64);
        let counts = match simulate_counts(&dist, config.mean_total, seed) {
            Ok(c) => c,
            Err(e) => return fail(e.to_string()),
        };
        match empirical_stats(&counts, &priors.values) {
            Ok(stats) => {
                successes.push(stats.p_success);
                errors.push(stats.p_error);
            }
            Err(e) => return fail(e.to_string()),
        }
    }
    let (s_mean, s_std) = mean_std(&successes);
    let (e_mean, e_std) = mean_std(&errors);
    SweepPoint {
        phi,
        priors_label: priors.label,
        p_success_theory: theory,
        p_success_mc_mean: s_mean,
        p_success_mc_std: s_std,
        p_error_mc_mean: e_mean,
        p_error_mc_std: e_std,
        single_sample: config.repetitions <= 1,
        failure: None,
    }
}

/// Sample mean and standard deviation (n - 1 normalization; zero for a
/// single sample).
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

// ---------------------------------------------------------------------------
// Mutually unbiased bases for dimension 4 and the crosstalk/visibility check.
// ---------------------------------------------------------------------------

/// The five four-dimensional MUBs, 20 vectors in total.
///
/// Construction: the fifteen nontrivial two-qubit Pauli operators split into
/// five mutually commuting triples
///
/// ```text
/// {ZI, IZ, ZZ}, {XI, IX, XX}, {YI, IY, YY}, {XY, YZ, ZX}, {XZ, YX, ZY}
/// ```
///
/// and each triple's joint eigenbasis is one group. Group 0 is the standard
/// basis. Vectors are extracted from the rank-one joint projectors
/// `(I + aA)(I + bB)/4` with `(a, b)` running over `(+,+), (+,-), (-,+),
/// (-,-)`, and gauge-fixed so the largest coordinate is real positive.
pub fn mub4_bases() -> Vec<Vec<DVector<C64>>> {
    let pairs = [("ZI", "IZ"), ("XI", "IX"), ("YI", "IY"), ("XY", "YZ"), ("XZ", "YX")];
    pairs
        .iter()
        .map(|&(a, b)| {
            let (ma, mb) = (pauli_2q(a), pauli_2q(b));
            let id = DMatrix::<C64>::identity(4, 4);
            [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
                .iter()
                .map(|&(sa, sb)| {
                    let proj = (&id + ma.scale(sa)) * (&id + mb.scale(sb)) * C64::new(0.25, 0.0);
                    let mut best = DVector::<C64>::zeros(4);
                    let mut best_norm = -1.0;
                    for c in 0..4 {
                        let col = proj.column(c).into_owned();
                        let norm = col.norm();
                        if norm > best_norm + 1e-12 {
                            best_norm = norm;
                            best = col;
                        }
                    }
                    let mut v = best.unscale(best_norm);
                    crate::linalg::gauge_fix(&mut v);
                    v
                })
                .collect()
        })
        .collect()
}

fn pauli_1q(c: char) -> DMatrix<C64> {
    let z = |re: f64, im: f64| C64::new(re, im);
    match c {
        'I' => DMatrix::from_row_slice(2, 2, &[z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)]),
        'X' => DMatrix::from_row_slice(2, 2, &[z(0.0, 0.0), z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0)]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z(0.0, 0.0), z(0.0, -1.0), z(0.0, 1.0), z(0.0, 0.0)]),
        'Z' => DMatrix::from_row_slice(2, 2, &[z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(-1.0, 0.0)]),
        other => panic!("unknown Pauli label {other}"),
    }
}

fn pauli_2q(label: &str) -> DMatrix<C64> {
    let mut chars = label.chars();
    let a = pauli_1q(chars.next().unwrap());
    let b = pauli_1q(chars.next().unwrap());
    a.kronecker(&b)
}

/// How crosstalk counts are produced.
#[derive(Debug, Clone, Copy)]
pub enum CountMode {
    /// Report the exact cell probabilities.
    Exact,
    /// Poisson counts with the given per-cell mean budget.
    Poisson { mean_total: f64, seed: u64 },
}

/// Crosstalk matrix over all 20 preparation and 20 measurement vectors plus
/// per-group visibilities.
#[derive(Debug, Clone, Serialize)]
pub struct CrosstalkReport {
    /// `matrix[prepared][measured]`.
    pub matrix: Vec<Vec<f64>>,
    /// One visibility per MUB group, diagonal block counts over total block
    /// counts.
    pub visibilities: Vec<f64>,
    pub epsilon: f64,
}

/// Simulate the preparation/measurement crosstalk under a depolarizing knob:
/// each cell has probability `(1 - eps) |<m|p>|^2 + eps / 4`.
pub fn crosstalk_visibility(
    prep_groups: &[Vec<DVector<C64>>],
    meas_groups: &[Vec<DVector<C64>>],
    epsilon: f64,
    mode: CountMode,
) -> Result<CrosstalkReport> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let dim = prep_groups
        .first()
        .and_then(|g| g.first())
        .map(|v| v.len())
        .ok_or_else(|| Error::InvalidInput("empty preparation groups".into()))?;
    let prep: Vec<&DVector<C64>> = prep_groups.iter().flatten().collect();
    let meas: Vec<&DVector<C64>> = meas_groups.iter().flatten().collect();
    let uniform = epsilon / dim as f64;

    let mut matrix = vec![vec![0.0f64; meas.len()]; prep.len()];
    match mode {
        CountMode::Exact => {
            for (p, row) in prep.iter().zip(matrix.iter_mut()) {
                for (m, out) in meas.iter().zip(row.iter_mut()) {
                    *out = (1.0 - epsilon) * m.dotc(p).norm_sqr() + uniform;
                }
            }
        }
        CountMode::Poisson { mean_total, seed } => {
            if mean_total.is_nan() || mean_total <= 0.0 {
                return Err(Error::InvalidInput("mean_total must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (p, row) in prep.iter().zip(matrix.iter_mut()) {
                for (m, out) in meas.iter().zip(row.iter_mut()) {
                    let cell = (1.0 - epsilon) * m.dotc(p).norm_sqr() + uniform;
                    let mean = mean_total * cell;
                    *out = if mean <= 0.0 {
                        0.0
                    } else {
                        Poisson::new(mean).expect("positive mean").sample(&mut rng)
                    };
                }
            }
        }
    }

    let mut visibilities = Vec::with_capacity(prep_groups.len());
    let mut offset = 0usize;
    for group in prep_groups {
        let size = group.len();
        let mut diag = 0.0;
        let mut total = 0.0;
        for (i, row) in matrix.iter().enumerate().skip(offset).take(size) {
            for (j, value) in row.iter().enumerate().skip(offset).take(size) {
                total += value;
                if i == j {
                    diag += value;
                }
            }
        }
        visibilities.push(if total > 0.0 { diag / total } else { f64::NAN });
        offset += size;
    }
    Ok(CrosstalkReport { matrix, visibilities, epsilon })
}
