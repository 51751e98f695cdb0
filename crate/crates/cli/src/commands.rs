//! Command implementations.

use crate::config::{parse_grid, GenerateSection, RunConfig, SolveRsSection};
use anyhow::{anyhow, bail, Context, Result};
use overfit_core::correction::{correct_frailty, load_table_csv, save_table_csv};
use overfit_core::mle::fit;
use overfit_core::models::io::{save_dataset, save_model_spec, load_dataset};
use overfit_core::models::{sample_beta0, sample_dataset};
use overfit_core::rng::derive_seed;
use overfit_core::rs::{load_solutions_csv, save_solutions_csv, sweep_rs_frailty, sweep_rs_loglogistic, sweep_rs_weibull};
use overfit_core::simlab::io::{save_comparison_csv, load_summary_csv, save_summary_csv};
use overfit_core::simlab::{compare_to_theory, run_plan, SimulationSummary};
use overfit_core::{
    correct_loglinear, correct_loglogistic_native, correct_weibull_native, solve_correction_grid, CorrectionTable,
    Family, FitOptions, MLEstimate, ModelSpec, RsConfig, RsModel, RsSolution,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// How a command finished when it did not error out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NonConvergence,
    ComparisonFailed,
}

pub struct RunContext {
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl RunContext {
    fn config(&self) -> Result<&RunConfig> {
        self.config.as_ref().ok_or_else(|| anyhow!("this command needs --config"))
    }

    fn out_path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn generate(ctx: &RunContext) -> Result<Outcome> {
    let GenerateSection { n, p, beta_scale, nuisance0, covariance, seed } = ctx
        .config()?
        .generate
        .clone()
        .ok_or_else(|| anyhow!("config has no 'generate' section"))?;
    let seed = ctx.seed.unwrap_or(seed);
    if p == 0 || n <= p {
        bail!("need N > p >= 1, got N={n}, p={p}");
    }
    let beta0 = sample_beta0(p, beta_scale.component_sd(p), derive_seed(seed, &[0]))?;
    let spec = ModelSpec::new(beta0, nuisance0)?;
    let ds = sample_dataset(&spec, n, derive_seed(seed, &[1]), &covariance)?;
    let (data_path, spec_path) = (ctx.out_path("dataset.csv")?, ctx.out_path("model.json")?);
    save_dataset(&ds, &data_path)?;
    save_model_spec(&spec, &spec_path)?;
    println!("seed {seed}");
    println!("S^2 {:.6}", spec.s_squared());
    println!("wrote {} and {}", data_path.display(), spec_path.display());
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct FitDiagnostics<'a> {
    converged: bool,
    error: Option<String>,
    estimate: Option<&'a MLEstimate>,
}

pub fn fit_dataset(ctx: &RunContext, dataset: &Path, family: Family, max_iter: Option<usize>) -> Result<Outcome> {
    let ds = load_dataset(dataset).with_context(|| format!("reading {}", dataset.display()))?;
    let mut opts = FitOptions::default();
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    let est = match fit(&ds, family, &opts) {
        Ok(est) => est,
        Err(e @ (overfit_core::Error::NoConvergence { .. } | overfit_core::Error::Divergence(_))) => {
            let diag = FitDiagnostics { converged: false, error: Some(e.to_string()), estimate: None };
            println!("{}", serde_json::to_string_pretty(&diag)?);
            return Ok(Outcome::NonConvergence);
        }
        Err(e) => return Err(e.into()),
    };
    let path = ctx.out_path("estimate.json")?;
    write_json(&est, &path)?;
    if !est.converged {
        let diag = FitDiagnostics { converged: false, error: None, estimate: Some(&est) };
        println!("{}", serde_json::to_string_pretty(&diag)?);
        return Ok(Outcome::NonConvergence);
    }
    println!("wrote {} ({} iterations, gradient {:.2e})", path.display(), est.iterations, est.grad_norm);
    Ok(Outcome::Success)
}

pub struct SolveArgs {
    pub family: Option<Family>,
    pub zeta: Option<String>,
    pub theta0: Option<String>,
    pub doubled: bool,
}

pub fn solve_rs(ctx: &RunContext, args: SolveArgs) -> Result<Outcome> {
    let section: Option<SolveRsSection> = ctx.config.as_ref().and_then(|c| c.solve_rs.clone());
    let family = args
        .family
        .or(section.as_ref().map(|s| s.family))
        .ok_or_else(|| anyhow!("give --family or a 'solve_rs' config section"))?;
    let zetas = match (&args.zeta, &section) {
        (Some(z), _) => parse_grid(z)?,
        (None, Some(s)) => s.zeta_grid.clone(),
        (None, None) => bail!("give --zeta or a 'solve_rs' config section"),
    };
    let theta0s = match (&args.theta0, &section) {
        (Some(t), _) => Some(parse_grid(t)?),
        (None, Some(s)) => s.theta0_grid.clone(),
        (None, None) => None,
    };
    let doubled = args.doubled || section.as_ref().is_some_and(|s| s.doubled);
    let cfg = if doubled { RsConfig::default().doubled() } else { RsConfig::default() };
    let grid = solve_correction_grid(family, &zetas, theta0s.as_deref(), &cfg)?;
    let table = grid.table();
    let mut failed = 0;
    let curves: Vec<(Option<f64>, &Vec<overfit_core::Result<RsSolution>>)> = if grid.theta0s.is_empty() {
        vec![(None, &grid.sweeps[0])]
    } else {
        grid.theta0s.iter().map(|&t| Some(t)).zip(&grid.sweeps).collect()
    };
    for (theta0, sweep) in curves {
        let sols: Vec<RsSolution> = sweep.iter().filter_map(|s| s.as_ref().ok().cloned()).collect();
        failed += sweep.len() - sols.iter().filter(|s| s.converged).count();
        let name = match theta0 {
            Some(t) => format!("rs_{family}_theta0_{t}.csv"),
            None => format!("rs_{family}.csv"),
        };
        let path = ctx.out_path(&name)?;
        save_solutions_csv(&sols, &path)?;
        println!("wrote {}", path.display());
    }
    let path = ctx.out_path(&format!("table_{family}.csv"))?;
    save_table_csv(&table, &path)?;
    println!("wrote {}", path.display());
    for f in &table.failures {
        eprintln!("grid point zeta={} theta0={:?} failed: {}", f.zeta, f.theta0, f.reason);
    }
    Ok(if failed > 0 { Outcome::NonConvergence } else { Outcome::Success })
}

#[derive(Serialize)]
struct TableInfo {
    path: PathBuf,
    sha256: String,
    zeta_max: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Corrected {
    LocationScale { log_linear: overfit_core::correction::CorrectedLogLinear, native: overfit_core::correction::CorrectedNative },
    Frailty(overfit_core::correction::CorrectedFrailty),
}

#[derive(Serialize)]
struct CorrectedReport {
    family: Family,
    zeta: f64,
    estimate: MLEstimate,
    corrected: Corrected,
    table: TableInfo,
    /// `zeta` is not a grid node, so the factors are interpolated.
    interpolated: bool,
}

pub fn correct(ctx: &RunContext, estimate: &Path, table: Option<&Path>, zeta: Option<f64>) -> Result<Outcome> {
    let table_path = match table {
        Some(t) => t.to_path_buf(),
        None => ctx
            .config
            .as_ref()
            .and_then(|c| c.correction_table.clone())
            .ok_or_else(|| anyhow!("give a table path or 'correction_table' in the config"))?,
    };
    let text = std::fs::read_to_string(estimate).with_context(|| format!("reading {}", estimate.display()))?;
    let est: MLEstimate = serde_json::from_str(&text).with_context(|| format!("parsing {}", estimate.display()))?;
    let bytes = std::fs::read(&table_path).with_context(|| format!("reading {}", table_path.display()))?;
    let table: CorrectionTable = overfit_core::correction::read_table_csv(bytes.as_slice())?;
    table.validate()?;
    let family = est.family().ok_or_else(|| anyhow!("estimate is not from a survival family"))?;
    if family != table.family {
        bail!("estimate family {family} does not match table family {}", table.family);
    }
    let zeta = zeta.unwrap_or_else(|| est.zeta());
    let corrected = match family {
        Family::WeibullPH => Corrected::LocationScale {
            log_linear: correct_loglinear(&est, &table, zeta)?,
            native: correct_weibull_native(&est, &table, zeta)?,
        },
        Family::LogLogisticAFT => Corrected::LocationScale {
            log_linear: correct_loglinear(&est, &table, zeta)?,
            native: correct_loglogistic_native(&est, &table, zeta)?,
        },
        Family::ExpGammaFrailty => Corrected::Frailty(correct_frailty(&est, &table, zeta)?),
    };
    let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let report = CorrectedReport {
        family,
        zeta,
        interpolated: !table.grid.contains(&zeta),
        table: TableInfo { path: table_path, sha256, zeta_max: *table.grid.last().unwrap_or(&0.0) },
        estimate: est,
        corrected,
    };
    let path = ctx.out_path("corrected.json")?;
    write_json(&report, &path)?;
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}

fn print_summary(summary: &SimulationSummary) {
    for row in &summary.rows {
        let cells: Vec<String> = row.metrics.iter().map(|m| format!("{}={:.4}({:.4})", m.name, m.mean, m.se)).collect();
        println!(
            "zeta={:.4} p={} M={} failed={}{} {}",
            row.zeta,
            row.p,
            row.m,
            row.n_failed,
            if row.flagged { " FLAGGED" } else { "" },
            cells.join(" ")
        );
    }
}

pub fn simulate(ctx: &RunContext) -> Result<Outcome> {
    let config = ctx.config()?;
    let mut plan = config.simulate.clone().ok_or_else(|| anyhow!("config has no 'simulate' section"))?;
    if let Some(seed) = ctx.seed {
        plan.base_seed = seed;
    }
    let table = match &config.correction_table {
        Some(p) => {
            let t = load_table_csv(p).with_context(|| format!("reading {}", p.display()))?;
            t.validate()?;
            Some(t)
        }
        None => None,
    };
    let summary = run_plan(&plan, table.as_ref())?;
    let path = ctx.out_path("summary.csv")?;
    save_summary_csv(&summary, &path)?;
    print_summary(&summary);
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}

fn theory_model(summary: &SimulationSummary) -> RsModel {
    match summary.family {
        Family::WeibullPH => RsModel::Weibull,
        Family::LogLogisticAFT => RsModel::LogLogistic,
        Family::ExpGammaFrailty => RsModel::Frailty { theta0: summary.nuisance0.shape() },
    }
}

/// Solves the RS equations at the summary's `p/N` values.
fn solve_theory(summary: &SimulationSummary) -> Result<Vec<RsSolution>> {
    let zetas: Vec<f64> = summary.rows.iter().map(|r| r.zeta).collect();
    let cfg = RsConfig::default();
    let sols = match summary.family {
        Family::WeibullPH => sweep_rs_weibull(&zetas, &cfg)?,
        Family::LogLogisticAFT => sweep_rs_loglogistic(&zetas, &cfg)?,
        Family::ExpGammaFrailty => sweep_rs_frailty(&zetas, summary.nuisance0.shape(), &cfg)?,
    };
    Ok(sols.into_iter().collect::<overfit_core::Result<_>>()?)
}

pub fn compare(ctx: &RunContext, summary: &Path, theory: Option<&Path>) -> Result<Outcome> {
    let summary = load_summary_csv(summary).with_context(|| format!("reading {}", summary.display()))?;
    let theory = match theory {
        Some(p) => load_solutions_csv(p, theory_model(&summary), 1.0).with_context(|| format!("reading {}", p.display()))?,
        None => solve_theory(&summary)?,
    };
    let cmp = compare_to_theory(&summary, &theory)?;
    let path = ctx.out_path("comparison.csv")?;
    save_comparison_csv(&cmp, &path)?;
    for row in &cmp.rows {
        let cells: Vec<String> = row.metrics.iter().map(|m| format!("{}: z={:+.2}", m.name, m.z)).collect();
        println!("zeta={:.4} {} {}", row.zeta, if row.pass { "pass" } else { "FAIL" }, cells.join(" "));
    }
    println!("wrote {}", path.display());
    Ok(if cmp.pass { Outcome::Success } else { Outcome::ComparisonFailed })
}
