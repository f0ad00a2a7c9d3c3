//! Command-line surface for the discrimination toolkit.
//!
//! Exit codes: 0 on success, 1 for I/O or argument problems, 2 when the
//! mathematics refuses (linearly dependent states, infeasible weights,
//! extension dimension too small, non-convergence).

mod commands;
mod output;
mod parse;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "qusd",
    version,
    about = "Optimal unambiguous discrimination of qudit ensembles: weights, POVMs, projective realizations, and photon-counting simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master RNG seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Output path (JSON commands default to stdout; crosstalk requires it).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Success-probability tolerance for extension-dimension searches.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol: f64,

    /// Mean photon budget per prepared state.
    #[arg(long = "mean-total", global = true, default_value_t = 1e4)]
    mean_total: f64,

    /// Monte Carlo repetitions per sweep point.
    #[arg(long, global = true, default_value_t = 1000)]
    repetitions: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal conclusive weights and the assembled POVM.
    Solve(commands::EnsembleArgs),
    /// Projective realization on the enlarged space.
    Extend(commands::ExtendArgs),
    /// Success-probability sweep over phi with Monte Carlo error bars.
    Sweep(commands::SweepArgs),
    /// Minimal projective dimension over the pattern ensembles.
    DimGrowth(commands::DimGrowthArgs),
    /// Photon-counting simulation of a synthesized measurement.
    Simulate(commands::ExtendArgs),
    /// MUB crosstalk matrix and per-group visibilities.
    Crosstalk(commands::CrosstalkArgs),
    /// Minimum-error discrimination bound.
    Mesd(commands::EnsembleArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_deref();
    let result = match &cli.command {
        Command::Solve(args) => commands::cmd_solve(args, out),
        Command::Extend(args) => commands::cmd_extend(args, cli.seed, cli.tol, out),
        Command::Sweep(args) => {
            commands::cmd_sweep(args, cli.seed, cli.mean_total, cli.repetitions, out)
        }
        Command::DimGrowth(args) => commands::cmd_dim_growth(args, cli.seed, cli.tol, out),
        Command::Simulate(args) => {
            commands::cmd_simulate(args, cli.seed, cli.tol, cli.mean_total, out)
        }
        Command::Crosstalk(args) => commands::cmd_crosstalk(args, cli.seed, cli.mean_total, out),
        Command::Mesd(args) => commands::cmd_mesd(args, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 2 for mathematical infeasibility, 1 for everything else (I/O, parsing,
/// malformed configuration).
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<qusd::Error>() {
        Some(core) => match core {
            qusd::Error::NotDiscriminable { .. }
            | qusd::Error::LinearlyDependent { .. }
            | qusd::Error::BerryPhaseNonzero { .. }
            | qusd::Error::ClosedFormInapplicable { .. }
            | qusd::Error::NegativeRadicand { .. }
            | qusd::Error::ExtensionTooSmall { .. }
            | qusd::Error::ComplexDualGram { .. }
            | qusd::Error::KktInapplicable { .. }
            | qusd::Error::InconclusiveNotPsd { .. }
            | qusd::Error::NonConvergence { .. } => 2,
            qusd::Error::InvalidInput(_)
            | qusd::Error::LengthMismatch { .. }
            | qusd::Error::ZeroRowCounts { .. } => 1,
        },
        None => 1,
    }
}
