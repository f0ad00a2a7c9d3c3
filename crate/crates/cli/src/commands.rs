//! Subcommand implementations.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

use qusd::ensemble::{lg_triple, EnsembleJson, LgTripleParams, StateEnsemble};
use qusd::linalg;
use qusd::mesd::{mesd_bound, optimality_certificate};
use qusd::naimark::{
    extend_2, extend_3_closed_form, extend_general, min_extension_dim, ExtendOptions,
    MeasurementJson, ProjectiveMeasurement,
};
use qusd::photonsim::{
    crosstalk_visibility, monte_carlo_sweep, mub4_bases, outcome_probs, simulate_counts,
    CountMode, CountTable, EmpiricalStats, PriorSet, SweepConfig,
};
use qusd::solver::{build_povm, solve_optimal_alpha, PovmDiagnostics, SolverReport};

use crate::output::{self, fmt_f64, Csv};
use crate::parse;

/// Visibilities reported for the published experiment; annotation only.
const REFERENCE_VISIBILITIES_PERCENT: [f64; 5] = [96.8, 98.4, 95.4, 96.2, 97.9];

#[derive(clap::Args, Debug)]
pub struct EnsembleArgs {
    /// Ensemble JSON file ({dimension, states: [[[re,im],..],..], priors}).
    #[arg(long, value_name = "FILE", conflicts_with = "lg")]
    pub input: Option<PathBuf>,
    /// Laguerre-Gaussian angles xi,theta,phi (radians; 'pi' suffix scales).
    #[arg(long, value_name = "XI,THETA,PHI")]
    pub lg: Option<String>,
    /// Prior probabilities (decimals or fractions), e.g. 1/3,1/3,1/3.
    #[arg(long, value_name = "Q1,Q2,..")]
    pub priors: Option<String>,
}

pub fn load_ensemble(args: &EnsembleArgs) -> Result<StateEnsemble> {
    match (&args.input, &args.lg) {
        (Some(path), None) => {
            if args.priors.is_some() {
                bail!("--priors applies to --lg ensembles; priors of --input files live in the JSON");
            }
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(StateEnsemble::from_json_str(&text)?)
        }
        (None, Some(lg)) => {
            let angles = parse::angle_list(lg)?;
            if angles.len() != 3 {
                bail!("--lg needs exactly three angles, got {}", angles.len());
            }
            let params = LgTripleParams::new(angles[0], angles[1], angles[2])?;
            let priors = match &args.priors {
                Some(text) => {
                    let q = parse::prior_list(text)?;
                    if q.len() != 3 {
                        bail!("--priors needs three entries for --lg ensembles");
                    }
                    [q[0], q[1], q[2]]
                }
                None => [1.0 / 3.0; 3],
            };
            Ok(lg_triple(&params, priors)?)
        }
        _ => bail!("provide exactly one of --input or --lg"),
    }
}

fn complex_matrix(m: &qusd::nalgebra::DMatrix<qusd::C64>) -> Vec<Vec<[f64; 2]>> {
    linalg::matrix_to_pairs(m)
}

// -------------------------------------------------------------------------
// solve
// -------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveDoc {
    generated_unix: u64,
    ensemble: EnsembleJson,
    report: SolverReport,
    /// Tangency-ratio residual; present only for interior (surface) optima.
    surface_kkt_residual: Option<f64>,
    povm: PovmDoc,
}

#[derive(Serialize)]
struct PovmDoc {
    dual_vectors: Vec<Vec<[f64; 2]>>,
    elements: Vec<Vec<Vec<[f64; 2]>>>,
    inconclusive: Vec<Vec<[f64; 2]>>,
    diagnostics: PovmDiagnostics,
}

pub fn cmd_solve(args: &EnsembleArgs, out: Option<&Path>) -> Result<()> {
    let ensemble = load_ensemble(args)?;
    let report = solve_optimal_alpha(&ensemble)?;
    let povm = build_povm(&ensemble, &report.alpha_star)?;
    let diagnostics = povm.diagnostics(&ensemble);
    let surface_kkt_residual =
        qusd::solver::kkt_check(&ensemble.gram_matrix(), ensemble.priors(), &report.alpha_star.alphas)
            .ok();
    let doc = SolveDoc {
        generated_unix: output::now_unix(),
        ensemble: ensemble.to_json(),
        surface_kkt_residual,
        povm: PovmDoc {
            dual_vectors: povm.dual.vectors().iter().map(linalg::vector_to_pairs).collect(),
            elements: povm.elements.iter().map(complex_matrix).collect(),
            inconclusive: complex_matrix(&povm.inconclusive),
            diagnostics,
        },
        report,
    };
    output::write_json(out, &doc)
}

// -------------------------------------------------------------------------
// extend
// -------------------------------------------------------------------------

#[derive(clap::Args, Debug)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Force a specific extension dimension instead of searching.
    #[arg(long, value_name = "N")]
    pub d_ext: Option<usize>,
    /// Independent optimizer restarts (default: 50 for d <= 4, 200 beyond).
    #[arg(long, value_name = "N")]
    pub restarts: Option<usize>,
}

#[derive(Serialize)]
struct ExtendDoc {
    generated_unix: u64,
    seed: u64,
    method: String,
    ext_dim: usize,
    total_dim: usize,
    p_success: f64,
    p_optimal: f64,
    gap: f64,
    orthonormality_error: f64,
    unambiguity_error: f64,
    kappa: Option<f64>,
    extension_coefficients: Option<qusd::naimark::ExtensionCoefficients>,
    measurement: MeasurementJson,
}

pub fn cmd_extend(args: &ExtendArgs, seed: u64, tol: f64, out: Option<&Path>) -> Result<()> {
    let ensemble = load_ensemble(&args.ensemble)?;
    let d = ensemble.num_states();
    let p_optimal = solve_optimal_alpha(&ensemble)?.p_success;
    let mut opts = ExtendOptions::defaults_for(d, seed);
    if let Some(r) = args.restarts {
        opts.restarts = r;
    }

    let (method, measurement, kappa, coeffs): (
        String,
        ProjectiveMeasurement,
        Option<f64>,
        Option<qusd::naimark::ExtensionCoefficients>,
    ) = if let Some(d_ext) = args.d_ext {
        let g = extend_general(&ensemble, d_ext, &opts)?;
        ("general".into(), g.measurement, None, Some(g.coefficients))
    } else if d == 2 && ensemble.dim() == 2 {
        ("two_state".into(), extend_2(&ensemble)?, None, None)
    } else if d == 3 && ensemble.dim() == 3 {
        match extend_3_closed_form(&ensemble) {
            Ok((m, c)) => ("closed_form_d3".into(), m, Some(c.kappa), None),
            Err(_) => {
                let report = min_extension_dim(&ensemble, tol, &opts)?;
                let d_ext = report
                    .min_ext_dim
                    .ok_or(qusd::Error::ExtensionTooSmall { d_ext: report.ext_dim_cap })?;
                let g = extend_general(&ensemble, d_ext, &opts)?;
                ("general_min_dim".into(), g.measurement, None, Some(g.coefficients))
            }
        }
    } else {
        let report = min_extension_dim(&ensemble, tol, &opts)?;
        let d_ext = report
            .min_ext_dim
            .ok_or(qusd::Error::ExtensionTooSmall { d_ext: report.ext_dim_cap })?;
        let g = extend_general(&ensemble, d_ext, &opts)?;
        ("general_min_dim".into(), g.measurement, None, Some(g.coefficients))
    };

    let p_success = measurement.success_prob(&ensemble);
    let doc = ExtendDoc {
        generated_unix: output::now_unix(),
        seed,
        method,
        ext_dim: measurement.ext_dim(),
        total_dim: measurement.total_dim(),
        p_success,
        p_optimal,
        gap: p_optimal - p_success,
        orthonormality_error: measurement.orthonormality_error(),
        unambiguity_error: measurement.unambiguity_error(&ensemble),
        kappa,
        extension_coefficients: coeffs,
        measurement: measurement.to_json(),
    };
    output::write_json(out, &doc)
}

// -------------------------------------------------------------------------
// sweep
// -------------------------------------------------------------------------

#[derive(clap::Args, Debug)]
pub struct SweepArgs {
    /// Angle xi (default pi/3).
    #[arg(long, default_value = "0.3333333333333333pi")]
    pub xi: String,
    /// Angle theta (default 2 pi / 3).
    #[arg(long, default_value = "0.6666666666666666pi")]
    pub theta: String,
    /// Phi grid as start:stop:count (default the published 13 points).
    #[arg(long, default_value = "0.5pi:0.9pi:13")]
    pub phi_grid: String,
    /// Prior set, repeatable; defaults to the three published assignments.
    #[arg(long = "priors-set", value_name = "Q1,Q2,Q3")]
    pub priors_sets: Vec<String>,
}

pub fn cmd_sweep(
    args: &SweepArgs,
    seed: u64,
    mean_total: f64,
    repetitions: usize,
    out: Option<&Path>,
) -> Result<()> {
    let xi = parse::angle(&args.xi)?;
    let theta = parse::angle(&args.theta)?;
    let phi_values = parse::phi_grid(&args.phi_grid)?;
    let prior_sets: Vec<PriorSet> = if args.priors_sets.is_empty() {
        SweepConfig::paper_defaults(mean_total, repetitions, seed).prior_sets
    } else {
        args.priors_sets
            .iter()
            .map(|text| -> Result<PriorSet> {
                let q = parse::prior_list(text)?;
                if q.len() != 3 {
                    bail!("each --priors-set needs three entries");
                }
                Ok(PriorSet { label: text.replace(',', "-"), values: [q[0], q[1], q[2]] })
            })
            .collect::<Result<_>>()?
    };
    let config = SweepConfig {
        xi,
        theta,
        phi_values,
        prior_sets: prior_sets.clone(),
        mean_total,
        repetitions,
        seed,
    };
    let points = monte_carlo_sweep(&config);

    let mut csv = Csv::new(&[
        "phi",
        "priors_label",
        "p_succ_theory",
        "p_succ_mc_mean",
        "p_succ_mc_std",
        "p_err_mc_mean",
        "p_err_mc_std",
        "p_err_mesd",
    ]);
    for point in &points {
        if let Some(reason) = &point.failure {
            eprintln!(
                "sweep point phi={:.6}, priors={} failed: {reason}",
                point.phi, point.priors_label
            );
        }
        let priors = prior_sets
            .iter()
            .find(|ps| ps.label == point.priors_label)
            .map(|ps| ps.values)
            .unwrap_or([1.0 / 3.0; 3]);
        let p_err_mesd = LgTripleParams::new(xi, theta, point.phi)
            .ok()
            .and_then(|params| lg_triple(&params, priors).ok())
            .and_then(|e| mesd_bound(&e).ok())
            .map(|r| r.p_error_min)
            .unwrap_or(f64::NAN);
        csv.row(&[
            fmt_f64(point.phi),
            point.priors_label.clone(),
            fmt_f64(point.p_success_theory),
            fmt_f64(point.p_success_mc_mean),
            fmt_f64(point.p_success_mc_std),
            fmt_f64(point.p_error_mc_mean),
            fmt_f64(point.p_error_mc_std),
            fmt_f64(p_err_mesd),
        ]);
    }
    csv.write(out)
}

// -------------------------------------------------------------------------
// dim-growth
// -------------------------------------------------------------------------

#[derive(clap::Args, Debug)]
pub struct DimGrowthArgs {
    #[arg(long, default_value_t = 3)]
    pub d_min: usize,
    #[arg(long, default_value_t = 6)]
    pub d_max: usize,
    /// Overlap on the anti-diagonal and last row/column.
    #[arg(long, default_value_t = 0.3)]
    pub strong: f64,
    /// Overlap elsewhere.
    #[arg(long, default_value_t = 0.1)]
    pub weak: f64,
    /// Optimizer restarts per extension dimension.
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
}

pub fn cmd_dim_growth(args: &DimGrowthArgs, seed: u64, tol: f64, out: Option<&Path>) -> Result<()> {
    if args.d_min < 2 || args.d_max < args.d_min {
        bail!("need 2 <= d_min <= d_max");
    }
    let mut csv = Csv::new(&[
        "d",
        "state_dim",
        "ext_dim",
        "total_dim",
        "p_success",
        "p_optimal",
        "gap",
        "status",
    ]);
    for d in args.d_min..=args.d_max {
        let gram = qusd::ensemble::overlap_pattern_gram(d, args.strong, args.weak);
        let ensemble = StateEnsemble::from_gram(&gram, vec![1.0 / d as f64; d])?;
        let opts = ExtendOptions { restarts: args.restarts, seed: seed ^ d as u64, target: None };
        let report = min_extension_dim(&ensemble, tol, &opts)?;
        for point in &report.curve {
            let status = match (report.min_ext_dim, point.p_success) {
                (Some(min), Some(_)) if point.ext_dim == min => "minimal",
                (_, Some(_)) => "searched",
                (None, None) if point.ext_dim == report.ext_dim_cap => "upper_bound_only",
                (_, None) => "infeasible",
            };
            csv.row(&[
                d.to_string(),
                ensemble.dim().to_string(),
                point.ext_dim.to_string(),
                (ensemble.dim() + point.ext_dim).to_string(),
                point.p_success.map(fmt_f64).unwrap_or_else(|| "NaN".into()),
                fmt_f64(report.p_optimal),
                point.gap.map(fmt_f64).unwrap_or_else(|| "NaN".into()),
                status.to_string(),
            ]);
        }
    }
    csv.write(out)
}

// -------------------------------------------------------------------------
// simulate
// -------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateDoc {
    generated_unix: u64,
    seed: u64,
    mean_total: f64,
    method: String,
    probabilities: Vec<Vec<f64>>,
    counts: CountTable,
    stats: EmpiricalStats,
}

pub fn cmd_simulate(
    args: &ExtendArgs,
    seed: u64,
    tol: f64,
    mean_total: f64,
    out: Option<&Path>,
) -> Result<()> {
    let ensemble = load_ensemble(&args.ensemble)?;
    let d = ensemble.num_states();
    let mut opts = ExtendOptions::defaults_for(d, seed);
    if let Some(r) = args.restarts {
        opts.restarts = r;
    }
    let (method, measurement): (String, ProjectiveMeasurement) = if let Some(d_ext) = args.d_ext {
        ("general".into(), extend_general(&ensemble, d_ext, &opts)?.measurement)
    } else if d == 2 && ensemble.dim() == 2 {
        ("two_state".into(), extend_2(&ensemble)?)
    } else if d == 3 && ensemble.dim() == 3 {
        match extend_3_closed_form(&ensemble) {
            Ok((m, _)) => ("closed_form_d3".into(), m),
            Err(_) => {
                let report = min_extension_dim(&ensemble, tol, &opts)?;
                let d_ext = report
                    .min_ext_dim
                    .ok_or(qusd::Error::ExtensionTooSmall { d_ext: report.ext_dim_cap })?;
                ("general_min_dim".into(), extend_general(&ensemble, d_ext, &opts)?.measurement)
            }
        }
    } else {
        let report = min_extension_dim(&ensemble, tol, &opts)?;
        let d_ext = report
            .min_ext_dim
            .ok_or(qusd::Error::ExtensionTooSmall { d_ext: report.ext_dim_cap })?;
        ("general_min_dim".into(), extend_general(&ensemble, d_ext, &opts)?.measurement)
    };
    let dist = outcome_probs(&measurement, &ensemble)?;
    let counts = simulate_counts(&dist, mean_total, seed)?;
    let stats = qusd::photonsim::empirical_stats(&counts, ensemble.priors())?;
    let doc = SimulateDoc {
        generated_unix: output::now_unix(),
        seed,
        mean_total,
        method,
        probabilities: dist.probs.clone(),
        counts,
        stats,
    };
    output::write_json(out, &doc)
}

// -------------------------------------------------------------------------
// crosstalk
// -------------------------------------------------------------------------

#[derive(clap::Args, Debug)]
pub struct CrosstalkArgs {
    /// Depolarizing noise strength in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Report exact probabilities instead of Poisson counts.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Serialize)]
struct CrosstalkDoc {
    generated_unix: u64,
    seed: u64,
    epsilon: f64,
    mode: String,
    mean_total: Option<f64>,
    visibilities: Vec<f64>,
    /// Published hardware visibilities, shown for reference only.
    reference_visibilities_percent: [f64; 5],
    matrix: Vec<Vec<f64>>,
}

pub fn cmd_crosstalk(
    args: &CrosstalkArgs,
    seed: u64,
    mean_total: f64,
    out: Option<&Path>,
) -> Result<()> {
    let out = out.ok_or_else(|| {
        anyhow::anyhow!("crosstalk writes <out>.json and <out>.csv; --out is required")
    })?;
    let groups = mub4_bases();
    let mode = if args.exact {
        CountMode::Exact
    } else {
        CountMode::Poisson { mean_total, seed }
    };
    let report = crosstalk_visibility(&groups, &groups, args.epsilon, mode)?;

    let doc = CrosstalkDoc {
        generated_unix: output::now_unix(),
        seed,
        epsilon: args.epsilon,
        mode: if args.exact { "exact".into() } else { "poisson".into() },
        mean_total: (!args.exact).then_some(mean_total),
        visibilities: report.visibilities.clone(),
        reference_visibilities_percent: REFERENCE_VISIBILITIES_PERCENT,
        matrix: report.matrix.clone(),
    };
    output::write_json(Some(&out.with_extension("json")), &doc)?;

    let labels: Vec<String> =
        (0..5).flat_map(|g| (0..4).map(move |v| format!("g{g}v{v}"))).collect();
    let mut header: Vec<&str> = vec!["prep"];
    header.extend(labels.iter().map(|s| s.as_str()));
    let mut csv = Csv::new(&header);
    for (i, row) in report.matrix.iter().enumerate() {
        let mut fields = vec![labels[i].clone()];
        fields.extend(row.iter().map(|v| fmt_f64(*v)));
        csv.row(&fields);
    }
    csv.write(Some(&out.with_extension("csv")))
}

// -------------------------------------------------------------------------
// mesd
// -------------------------------------------------------------------------

#[derive(Serialize)]
struct MesdDoc {
    generated_unix: u64,
    p_error_min: f64,
    iterations: usize,
    residual: f64,
    certificate_hermiticity: f64,
    certificate_margin: f64,
    usd_failure_probability: Option<f64>,
    povm_elements: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn cmd_mesd(args: &EnsembleArgs, out: Option<&Path>) -> Result<()> {
    let ensemble = load_ensemble(args)?;
    let result = mesd_bound(&ensemble)?;
    let (herm, margin) = optimality_certificate(&ensemble, &result.povm);
    let usd_failure = solve_optimal_alpha(&ensemble).ok().map(|r| 1.0 - r.p_success);
    let doc = MesdDoc {
        generated_unix: output::now_unix(),
        p_error_min: result.p_error_min,
        iterations: result.iterations,
        residual: result.residual,
        certificate_hermiticity: herm,
        certificate_margin: margin,
        usd_failure_probability: usd_failure,
        povm_elements: result.povm.iter().map(complex_matrix).collect(),
    };
    output::write_json(out, &doc)
}

