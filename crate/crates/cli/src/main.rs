//! `overfit`: generate data, fit models, solve the RS equations, correct
//! estimates, run simulation studies and compare them with theory.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! non-convergence, 3 failed theory comparison.

use clap::{Parser, Subcommand};
use overfit_cli::commands::{self, Outcome, RunContext, SolveArgs};
use overfit_cli::config::RunConfig;
use overfit_core::Family;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "overfit", version, about = "Overfitting bias in high-dimensional survival regression")]
struct Cli {
    /// JSON run configuration (`version: 1`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of `generate` and `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: the config's `out_dir`, else `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a data set and its generating model from the `generate` section.
    Generate,
    /// Fit a family to a data set CSV by maximum likelihood.
    Fit {
        dataset: PathBuf,
        #[arg(long)]
        family: Family,
        /// Newton iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Solve the RS equations on a zeta grid and write solutions and a correction table.
    SolveRs {
        #[arg(long)]
        family: Option<Family>,
        /// `lo:hi:step` or a comma-separated list.
        #[arg(long)]
        zeta: Option<String>,
        /// True frailty variances (frailty only).
        #[arg(long)]
        theta0: Option<String>,
        /// Use doubled quadrature orders.
        #[arg(long)]
        doubled: bool,
    },
    /// Correct an estimate JSON with a correction table.
    Correct {
        estimate: PathBuf,
        /// Table CSV (default: the config's `correction_table`).
        table: Option<PathBuf>,
        /// Operating point (default: the estimate's p/N).
        #[arg(long)]
        zeta: Option<f64>,
    },
    /// Run the `simulate` plan and write a summary CSV.
    Simulate,
    /// Compare a summary CSV with RS predictions; exits 3 if any |z| > 3.
    Compare {
        summary: PathBuf,
        /// RS solutions CSV; solved at the summary's zeta values when absent.
        #[arg(long)]
        theory: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<overfit_core::Error>(),
            Some(overfit_core::Error::NoConvergence { .. } | overfit_core::Error::Divergence(_) | overfit_core::Error::NonFinite(_))
        )
    });
    if numerical {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let out = cli
        .out
        .or_else(|| config.as_ref().and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = RunContext { config, seed: cli.seed, out };
    match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Fit { dataset, family, max_iter } => commands::fit_dataset(&ctx, &dataset, family, max_iter),
        Command::SolveRs { family, zeta, theta0, doubled } => {
            commands::solve_rs(&ctx, SolveArgs { family, zeta, theta0, doubled })
        }
        Command::Correct { estimate, table, zeta } => commands::correct(&ctx, &estimate, table.as_deref(), zeta),
        Command::Simulate => commands::simulate(&ctx),
        Command::Compare { summary, theory } => commands::compare(&ctx, &summary, theory.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NonConvergence) => ExitCode::from(2),
        Ok(Outcome::ComparisonFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
