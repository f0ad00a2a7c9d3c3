//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p qusd --test acceptance -- --nocapture` to see the
//! per-criterion lines.

mod common;

use common::*;
use qusd::analytic::{idp_optimal_2, success_prob, surface_solutions_3, SurfaceKind};
use qusd::ensemble::{gram_data, lg_triple, overlap_pattern_gram, LgTripleParams, StateEnsemble};
use qusd::mesd::{helstrom_2, mesd_bound, optimality_certificate};
use qusd::naimark::{
    extend_2, extend_3_closed_form, extend_general, lg_closed_form_vectors,
    lg_simplified_coefficients, min_extension_dim, ExtendOptions, ProjectiveMeasurement,
};
use qusd::photonsim::{
    crosstalk_visibility, monte_carlo_sweep, mub4_bases, CountMode, SweepConfig,
};
use qusd::solver::solve_optimal_alpha;
use std::f64::consts::PI;
use std::time::Instant;

const PAPER_PRIOR_SETS: [[f64; 3]; 3] =
    [[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], [5.0 / 12.0, 7.0 / 24.0, 7.0 / 24.0], [0.5, 0.25, 0.25]];

fn pass(n: usize, name: &str) {
    println!("[acceptance] criterion {n} ({name}): PASS");
}

/// Synthesize a projective USD measurement for a random real ensemble.
fn synthesize(e: &StateEnsemble, seed: u64) -> ProjectiveMeasurement {
    match (e.num_states(), e.dim()) {
        (2, 2) => extend_2(e).expect("two-state synthesis"),
        (3, 3) => match extend_3_closed_form(e) {
            Ok((m, _)) => m,
            Err(_) => {
                extend_general(e, 3, &ExtendOptions { restarts: 6, seed, target: None })
                    .expect("qutrit fallback synthesis")
                    .measurement
            }
        },
        (d, _) => {
            extend_general(e, d, &ExtendOptions { restarts: 6, seed, target: None })
                .expect("general synthesis")
                .measurement
        }
    }
}

/// Criterion 1: synthesized measurements are orthonormal and unambiguous on
/// random linearly independent ensembles, 100 per d in {2, 3, 4}.
#[test]
fn criterion_1_unambiguity_suite() {
    let started = Instant::now();
    let mut rng = seeded(0xACC1);
    for d in [2usize, 3, 4] {
        for i in 0..100 {
            let e = random_real_ensemble(d, d, &mut rng);
            let m = synthesize(&e, (d * 1000 + i) as u64);
            let ortho = m.orthonormality_error();
            let unamb = m.unambiguity_error(&e);
            assert!(ortho <= 1e-10, "d={d} #{i}: orthonormality {ortho:e}");
            assert!(unamb <= 1e-10, "d={d} #{i}: unambiguity {unamb:e}");
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "unambiguity suite took {elapsed:.2?}");
    pass(1, "unambiguity suite");
}

/// Criterion 2: two-state reproduction of the IDP limit and the boundary
/// regime.
#[test]
fn criterion_2_idp_reproduction() {
    for k in 1..=9 {
        let s = k as f64 / 10.0;
        let e = two_state(s, [0.5, 0.5]);
        let expect = 1.0 - s;
        let analytic =
            success_prob(&idp_optimal_2(&e).unwrap().alphas, e.priors()).unwrap();
        let solver = solve_optimal_alpha(&e).unwrap().p_success;
        let projective = extend_2(&e).unwrap().success_prob(&e);
        assert!((analytic - expect).abs() < 1e-6, "s={s}: analytic {analytic}");
        assert!((solver - expect).abs() < 1e-6, "s={s}: solver {solver}");
        assert!((projective - expect).abs() < 1e-6, "s={s}: projective {projective}");
    }
    // boundary regime sqrt(q2/q1) < s
    for (s, q1) in [(0.5f64, 0.95f64), (0.8, 0.9), (0.9, 0.6)] {
        let q2 = 1.0 - q1;
        assert!((q2 / q1).sqrt() < s, "not a boundary instance");
        let e = two_state(s, [q1, q2]);
        let expect = q1.max(q2) * (1.0 - s * s);
        let analytic =
            success_prob(&idp_optimal_2(&e).unwrap().alphas, e.priors()).unwrap();
        let solver = solve_optimal_alpha(&e).unwrap().p_success;
        let projective = extend_2(&e).unwrap().success_prob(&e);
        assert!((analytic - expect).abs() < 1e-8, "s={s}, q1={q1}: analytic {analytic}");
        assert!((solver - expect).abs() < 1e-8, "s={s}, q1={q1}: solver {solver}");
        assert!((projective - expect).abs() < 1e-8, "s={s}, q1={q1}: projective {projective}");
    }
    pass(2, "IDP reproduction");
}

/// Criterion 3: the symmetric triple yields 0.375 for all three paper prior
/// sets along all three routes.
#[test]
fn criterion_3_surface_reproduction() {
    let params = LgTripleParams { xi: PI / 3.0, theta: 2.0 * PI / 3.0, phi: 2.0 * PI / 3.0 };
    for priors in PAPER_PRIOR_SETS {
        let e = lg_triple(&params, priors).unwrap();
        let sols = surface_solutions_3(&gram_data(&e), e.priors()).unwrap();
        let best = sols.best_feasible().unwrap();
        assert_eq!(best.kind, SurfaceKind::First);
        let p_surface = best.p_success.unwrap();
        let p_solver = solve_optimal_alpha(&e).unwrap().p_success;
        let (m, _) = extend_3_closed_form(&e).unwrap();
        let p_projective = m.success_prob(&e);
        for (label, p) in
            [("surface", p_surface), ("solver", p_solver), ("projective", p_projective)]
        {
            assert!(
                (p - 0.375).abs() < 1e-6,
                "priors {priors:?}: {label} gives {p}, expected 0.375"
            );
        }
        assert!((p_surface - p_solver).abs() < 1e-6);
        assert!((p_surface - p_projective).abs() < 1e-6);
    }
    pass(3, "surface-solution reproduction");
}

/// Criterion 4: theory curves over the 13-point phi grid intersect at the
/// symmetric point and order correctly beyond it. The published hardware
/// numbers are annotations, not targets.
#[test]
fn criterion_4_success_probability_curves() {
    let phis: Vec<f64> = (0..13).map(|i| (0.5 + 0.4 * i as f64 / 12.0) * PI).collect();
    let theory = |phi: f64, priors: [f64; 3]| -> f64 {
        let params = LgTripleParams { xi: PI / 3.0, theta: 2.0 * PI / 3.0, phi };
        let e = lg_triple(&params, priors).unwrap();
        let (m, _) = extend_3_closed_form(&e).unwrap();
        m.success_prob(&e)
    };
    // intersection at phi = 2 pi / 3 (grid index 5)
    let symmetric_phi = phis[5];
    assert!((symmetric_phi - 2.0 * PI / 3.0).abs() < 1e-12);
    for priors in PAPER_PRIOR_SETS {
        let p = theory(symmetric_phi, priors);
        assert!((p - 0.375).abs() < 1e-6, "priors {priors:?}: intersection at {p}");
    }
    // ordering: beyond the symmetric point the weighted priors win
    for &phi in &phis[6..] {
        let uniform = theory(phi, PAPER_PRIOR_SETS[0]);
        for priors in [PAPER_PRIOR_SETS[1], PAPER_PRIOR_SETS[2]] {
            let p = theory(phi, priors);
            assert!(
                p > uniform,
                "phi = {:.4} pi: priors {priors:?} give {p} <= uniform {uniform}",
                phi / PI
            );
        }
    }
    println!(
        "[acceptance]   reference annotations (hardware, not targets): \
         avg error 4.24%, max error 7.46%, visibilities {{96.8, 98.4, 95.4, 96.2, 97.9}}%"
    );
    pass(4, "success-probability curves");
}

/// Criterion 5: Monte Carlo contract over the full 39-point sweep.
#[test]
fn criterion_5_monte_carlo_contract() {
    let started = Instant::now();
    let config = SweepConfig::paper_defaults(1e4, 1000, 0xC0FFEE);
    let points = monte_carlo_sweep(&config);
    assert_eq!(points.len(), 39);
    let mut covered = 0usize;
    for p in &points {
        assert!(p.failure.is_none(), "sweep point failed: {:?}", p.failure);
        assert!(
            p.p_error_mc_mean <= 5e-4,
            "phi = {:.4}, priors {}: error rate {}",
            p.phi,
            p.priors_label,
            p.p_error_mc_mean
        );
        if (p.p_success_mc_mean - p.p_success_theory).abs() <= 3.0 * p.p_success_mc_std {
            covered += 1;
        }
    }
    assert!(
        covered as f64 >= 0.99 * points.len() as f64,
        "only {covered}/39 points within 3 sigma"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "sweep took {elapsed:.2?}");
    pass(5, "Monte Carlo contract");
}

/// Criterion 6: dimension growth of the pattern ensembles with two-sided
/// certification of each minimal extension dimension.
#[test]
fn criterion_6_dimension_growth() {
    let started = Instant::now();
    let mut totals = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for d in 3..=6usize {
        let gram = overlap_pattern_gram(d, 0.3, 0.1);
        let e = StateEnsemble::from_gram(&gram, vec![1.0 / d as f64; d]).unwrap();
        let opts = ExtendOptions { restarts: 200, seed: 0xD1 + d as u64, target: None };
        let report = min_extension_dim(&e, 1e-4, &opts).unwrap();
        let min_ext = report.min_ext_dim.unwrap_or_else(|| {
            panic!("d={d}: no extension dimension reached the optimum below the cap")
        });
        let total = d + min_ext;
        totals.push((d, total));

        // two-sided certification
        let gap_at = |ext: usize| -> f64 {
            report
                .curve
                .iter()
                .find(|pt| pt.ext_dim == ext)
                .and_then(|pt| pt.gap)
                .unwrap_or(f64::INFINITY)
        };
        let gap_min = gap_at(min_ext);
        if gap_min.is_nan() || gap_min >= 1e-4 {
            failures.push(format!("d={d}: gap at d_ext_min is {gap_min:e}, not < 1e-4"));
        }
        if min_ext > 0 {
            let gap_below = gap_at(min_ext - 1);
            if gap_below.is_nan() || gap_below <= 1e-3 {
                failures.push(format!(
                    "d={d}: gap at d_ext_min - 1 is {gap_below:e}, not > 1e-3"
                ));
            }
        }
        if total < d {
            failures.push(format!("d={d}: total dimension {total} below state dimension"));
        }
        if total > d * (d + 1) / 2 {
            failures.push(format!("d={d}: total dimension {total} above d(d+1)/2"));
        }
        println!(
            "[acceptance]   d={d}: minimal total projective dimension {total} \
             (P* = {:.9}, curve {:?})",
            report.p_optimal,
            report
                .curve
                .iter()
                .map(|pt| (pt.ext_dim, pt.p_success.map(|p| (p * 1e6).round() / 1e6)))
                .collect::<Vec<_>>()
        );
    }
    for w in totals.windows(2) {
        if w[1].1 < w[0].1 {
            failures.push(format!(
                "total dimension decreased from d={} ({}) to d={} ({})",
                w[0].0, w[0].1, w[1].0, w[1].1
            ));
        }
    }
    // This criterion fixes the d=3 value to four dimensions. The certified
    // optimum disagrees: the d=3 pattern ensemble has a second-type optimum
    // whose inconclusive element has rank 2, so a 4-dimensional projective
    // measurement is confined to the unique kappa solution at P = 0.6333 vs
    // the optimal 2/3, and the true minimal total dimension is 5. The
    // assertion stays and fails honestly rather than being loosened.
    let d3_total = totals[0].1;
    if d3_total != 4 {
        failures.push(format!(
            "d=3: minimal total projective dimension is {d3_total}, criterion demands 4 \
             (second-type optimum alpha* = (0.8, 0.8, 0.4) needs a rank-2 remainder; \
             the 4-dim construction caps at P = 0.6333 vs optimal 0.6667)"
        ));
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1800.0, "dimension growth took {elapsed:.2?}");
    if failures.is_empty() {
        pass(6, "dimension growth");
    } else {
        println!("[acceptance] criterion 6 (dimension growth): FAIL");
        for f in &failures {
            println!("[acceptance]   - {f}");
        }
        panic!("criterion 6 failed: {failures:?}");
    }
}

/// Criterion 7: minimum-error baseline.
#[test]
fn criterion_7_mesd_baseline() {
    let mut rng = seeded(0xACC7);
    for _ in 0..100 {
        let e = random_complex_ensemble(2, 2, &mut rng);
        let closed = helstrom_2(&e).unwrap();
        let result = mesd_bound(&e).unwrap();
        assert!(
            (closed - result.p_error_min).abs() < 1e-6,
            "helstrom {closed} vs iterative {}",
            result.p_error_min
        );
        let (herm, margin) = optimality_certificate(&e, &result.povm);
        assert!(herm < 1e-8, "certificate Hermiticity {herm:e}");
        assert!(margin > -1e-7, "certificate margin {margin:e}");
        let usd = solve_optimal_alpha(&e).unwrap();
        assert!(result.p_error_min <= 1.0 - usd.p_success + 1e-7);
    }
    for _ in 0..100 {
        let e = random_complex_ensemble(3, 3, &mut rng);
        let result = mesd_bound(&e).unwrap();
        let (herm, margin) = optimality_certificate(&e, &result.povm);
        assert!(herm < 1e-8);
        assert!(margin > -1e-7, "certificate margin {margin:e}");
        let usd = solve_optimal_alpha(&e).unwrap();
        assert!(
            result.p_error_min <= 1.0 - usd.p_success + 1e-7,
            "MESD {} vs USD failure {}",
            result.p_error_min,
            1.0 - usd.p_success
        );
    }
    pass(7, "MESD baseline");
}

/// Criterion 8: the explicit Laguerre-Gaussian vectors match the kappa
/// construction over the phi grid, and the simplified shape functions match
/// the general ones.
#[test]
fn criterion_8_closed_form_cross_check() {
    let mut compared = 0usize;
    for i in 0..50 {
        let phi = (0.5 + 0.4 * i as f64 / 49.0) * PI;
        let params = LgTripleParams { xi: PI / 3.0, theta: 2.0 * PI / 3.0, phi };
        let (lg_form, kappa_form) = match (
            lg_closed_form_vectors(&params),
            lg_triple(&params, [1.0 / 3.0; 3]).and_then(|e| extend_3_closed_form(&e)),
        ) {
            (Ok(a), Ok(b)) => (a, b.0),
            _ => continue,
        };
        compared += 1;
        for j in 0..3 {
            let a = &lg_form.vectors[j];
            let b = &kappa_form.detectors()[j];
            let diff = (a - b).norm().min((a + b).norm());
            assert!(
                diff < 1e-8,
                "phi = {:.4} pi, vector {j}: per-sign mismatch {diff:e}",
                phi / PI
            );
        }
        // simplified parameters for theta = 2 pi / 3, xi = pi / 3
        let (gamma, lambda, omega_radicand) = lg_simplified_coefficients(phi);
        assert!((lg_form.coefficients.gamma - gamma).abs() < 1e-10);
        assert!((lg_form.coefficients.lambda - lambda).abs() < 1e-10);
        assert!((lg_form.omega_radicand - omega_radicand).abs() < 1e-8);
    }
    assert_eq!(compared, 50, "every grid point should be defined");
    pass(8, "closed-form cross-check");
}

/// Criterion 9: MUB structure and crosstalk visibilities.
#[test]
fn criterion_9_mub_crosstalk() {
    let groups = mub4_bases();
    assert_eq!(groups.len(), 5);
    assert_eq!(groups.iter().map(|g| g.len()).sum::<usize>(), 20);
    for (gi, g) in groups.iter().enumerate() {
        for (i, a) in g.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                let ip = a.dotc(b).norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (ip - expect).abs() <= 1e-12,
                    "group {gi}: <{i}|{j}> = {ip}"
                );
            }
        }
        for (hi, h) in groups.iter().enumerate() {
            if hi == gi {
                continue;
            }
            for a in g {
                for b in h {
                    let p = a.dotc(b).norm_sqr();
                    assert!(
                        (p - 0.25).abs() <= 1e-12,
                        "groups {gi}/{hi}: cross probability {p}"
                    );
                }
            }
        }
    }
    let clean = crosstalk_visibility(&groups, &groups, 0.0, CountMode::Exact).unwrap();
    for v in &clean.visibilities {
        assert_eq!(*v, 1.0, "clean visibility must be exactly 1");
    }
    let noisy = crosstalk_visibility(&groups, &groups, 0.12, CountMode::Exact).unwrap();
    for v in &noisy.visibilities {
        assert!((v - 0.91).abs() <= 1e-12, "noisy visibility {v}");
    }
    pass(9, "MUB crosstalk");
}
