//! Monte-Carlo studies: generate replicate data sets, fit them, measure
//! the scatter of estimated against true coefficients and the nuisance
//! estimates, aggregate per zeta and compare with the RS predictions.
//!
//! Replicates run in parallel; every replicate draws from its own stream
//! `derive_seed(base_seed, [zeta index, replicate, purpose])` and results
//! are reduced in replicate order, so summaries do not depend on the
//! number of threads.

mod compare;
pub mod io;
mod stats;

pub use compare::{compare_to_theory, Comparison, ComparisonRow, MetricComparison};
pub use stats::{mean_se, scatter_stats};

use crate::correction::{correct_loglinear, CorrectionTable};
use crate::error::{Error, Result};
use crate::mle::{fit, FitOptions, MLEstimate};
use crate::models::{from_log_linear, sample_beta0, sample_dataset, Covariance, Family, ModelSpec, Nuisance};
use crate::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of replicates per zeta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicatesRule {
    Fixed(usize),
    /// `ceil(base / zeta)` replicates, so that every zeta pools about the
    /// same number of coefficients.
    PerZeta(usize),
}

/// Spread of the true coefficients, drawn i.i.d. normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaScale {
    /// Standard deviation of each component.
    PerComponent(f64),
    /// Signal strength `S`; components have standard deviation `S/sqrt(p)`.
    Signal(f64),
}

impl BetaScale {
    pub fn component_sd(self, p: usize) -> f64 {
        match self {
            Self::PerComponent(s) => s,
            Self::Signal(s) => s / (p as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationPlan {
    pub family: Family,
    pub n: usize,
    pub zeta_grid: Vec<f64>,
    pub replicates: ReplicatesRule,
    pub beta_scale: BetaScale,
    pub nuisance0: Nuisance,
    pub base_seed: u64,
    #[serde(default)]
    pub covariance: Covariance,
    /// Draw the true coefficients once per zeta instead of once per
    /// replicate.
    #[serde(default)]
    pub fixed_beta0: bool,
    #[serde(default)]
    pub fit: FitOptions,
}

impl SimulationPlan {
    /// `p = round(zeta N)` for each grid point.
    pub fn dimensions(&self) -> Vec<usize> {
        self.zeta_grid.iter().map(|z| (z * self.n as f64).round() as usize).collect()
    }

    pub fn replicates_at(&self, zeta: f64) -> usize {
        match self.replicates {
            ReplicatesRule::Fixed(m) => m,
            ReplicatesRule::PerZeta(base) => (base as f64 / zeta).ceil() as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.zeta_grid.is_empty() {
            return Err(Error::InvalidInput("zeta grid is empty".into()));
        }
        if self.zeta_grid.windows(2).any(|w| !(w[1] > w[0])) || self.zeta_grid.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
            return Err(Error::InvalidInput("zeta grid must increase strictly inside (0, 1)".into()));
        }
        if self.nuisance0.family() != self.family {
            return Err(Error::InvalidInput("nuisance parameters do not match the family".into()));
        }
        self.nuisance0.validate()?;
        for (&z, p) in self.zeta_grid.iter().zip(self.dimensions()) {
            if p < 1 || p >= self.n {
                return Err(Error::InvalidInput(format!("zeta {z} gives p = {p} for N = {}", self.n)));
            }
            if self.replicates_at(z) < 2 {
                return Err(Error::InvalidInput("at least two replicates are needed per zeta".into()));
            }
        }
        match self.beta_scale {
            BetaScale::PerComponent(s) | BetaScale::Signal(s) if s.is_finite() && s > 0.0 => Ok(()),
            _ => Err(Error::InvalidInput("beta scale must be positive".into())),
        }
    }
}

/// Statistics of one fitted replicate, in the order of [`metric_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub values: Vec<f64>,
}

/// Names of the per-replicate statistics for a family, with or without
/// corrected quantities.
///
/// * `kappa`, `delta`: scatter of the log-linear coefficients;
/// * `kappa_native`, `delta_native`: scatter of the native coefficients;
/// * location-scale families: `sigma_ratio` (`sigma^/sigma0`), `phi_shift`
///   (`(phi^ - phi0)/sigma0`), `rho_ratio`, `lambda_ratio` and, with a
///   correction table, the same after correction plus the corrected
///   native slope;
/// * frailty: `theta_hat`, `phi_shift` (`phi^ - phi0`), `lambda_ratio` and
///   `theta_zero` (1 when the estimate sits on the `theta = 0` boundary).
pub fn metric_names(family: Family, corrected: bool) -> Vec<&'static str> {
    let mut names = vec!["kappa", "delta", "kappa_native", "delta_native"];
    if family == Family::ExpGammaFrailty {
        names.extend(["theta_hat", "phi_shift", "lambda_ratio", "theta_zero"]);
    } else {
        names.extend(["sigma_ratio", "phi_shift", "rho_ratio", "lambda_ratio"]);
        if corrected {
            names.extend(["sigma_ratio_corr", "phi_shift_corr", "rho_ratio_corr", "lambda_ratio_corr", "kappa_native_corr"]);
        }
    }
    names
}

/// Outcome of all replicates at one zeta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaReplicates {
    pub zeta_nominal: f64,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub records: Vec<ReplicateRecord>,
    /// `(replicate, reason)` for failed fits.
    pub failures: Vec<(usize, String)>,
}

fn replicate(
    plan: &SimulationPlan,
    table: Option<&CorrectionTable>,
    zi: usize,
    p: usize,
    rep: usize,
) -> Result<Vec<f64>> {
    let sd = plan.beta_scale.component_sd(p);
    let beta_seed = if plan.fixed_beta0 {
        derive_seed(plan.base_seed, &[zi as u64, 0, 0])
    } else {
        derive_seed(plan.base_seed, &[zi as u64, rep as u64 + 1, 1])
    };
    let beta0 = sample_beta0(p, sd, beta_seed)?;
    let spec = ModelSpec::new(beta0, plan.nuisance0)?;
    let data_seed = derive_seed(plan.base_seed, &[zi as u64, rep as u64 + 1, 2]);
    let ds = sample_dataset(&spec, plan.n, data_seed, &plan.covariance)?;
    let est = fit(&ds, plan.family, &plan.fit)?;
    if !est.converged {
        return Err(Error::NoConvergence { iterations: est.iterations, residual: est.grad_norm });
    }
    replicate_stats(&spec, &est, table)
}

/// Per-replicate statistics of an estimate against its generating model.
pub fn replicate_stats(spec: &ModelSpec, est: &MLEstimate, table: Option<&CorrectionTable>) -> Result<Vec<f64>> {
    let truth = spec.to_log_linear();
    let form = est.log_linear().ok_or_else(|| Error::InvalidInput("estimate has no survival family".into()))?;
    let native = from_log_linear(&form)?;
    let (kappa, delta) = scatter_stats(&form.varphi, &truth.varphi)?;
    let (kappa_n, delta_n) = scatter_stats(&native.beta0, &spec.beta0)?;
    let lambda_ratio = native.nuisance0.lambda() / spec.nuisance0.lambda();
    let mut v = vec![kappa, delta, kappa_n, delta_n];
    if spec.family() == Family::ExpGammaFrailty {
        v.extend([form.shape, form.phi - truth.phi, lambda_ratio, f64::from(u8::from(form.shape == 0.0))]);
        return Ok(v);
    }
    let sigma0 = truth.shape;
    v.extend([
        form.shape / sigma0,
        (form.phi - truth.phi) / sigma0,
        native.nuisance0.shape() / spec.nuisance0.shape(),
        lambda_ratio,
    ]);
    if let Some(table) = table {
        let c = correct_loglinear(est, table, est.zeta())?;
        let corrected = from_log_linear(&crate::models::LogLinearForm {
            family: form.family,
            varphi: c.varphi.clone(),
            phi: c.phi,
            shape: c.sigma,
        })?;
        let (kappa_c, _) = scatter_stats(&corrected.beta0, &spec.beta0)?;
        v.extend([
            c.sigma / sigma0,
            (c.phi - truth.phi) / sigma0,
            corrected.nuisance0.shape() / spec.nuisance0.shape(),
            corrected.nuisance0.lambda() / spec.nuisance0.lambda(),
            kappa_c,
        ]);
    }
    Ok(v)
}

/// Runs every replicate of a plan. Fit failures are recorded, not fatal.
pub fn run_replicates(plan: &SimulationPlan, table: Option<&CorrectionTable>) -> Result<Vec<ZetaReplicates>> {
    plan.validate()?;
    if let Some(t) = table {
        if t.family != plan.family || plan.family == Family::ExpGammaFrailty {
            return Err(Error::InvalidInput("correction table must match a location-scale plan family".into()));
        }
    }
    let dims = plan.dimensions();
    let jobs: Vec<(usize, usize, usize)> = plan
        .zeta_grid
        .iter()
        .zip(&dims)
        .enumerate()
        .flat_map(|(zi, (&z, &p))| (0..plan.replicates_at(z)).map(move |rep| (zi, p, rep)))
        .collect();
    let results: Vec<Result<Vec<f64>>> = jobs.par_iter().map(|&(zi, p, rep)| replicate(plan, table, zi, p, rep)).collect();
    let mut out: Vec<ZetaReplicates> = plan
        .zeta_grid
        .iter()
        .zip(&dims)
        .map(|(&z, &p)| ZetaReplicates {
            zeta_nominal: z,
            p,
            n: plan.n,
            m: plan.replicates_at(z),
            records: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for (&(zi, _, rep), res) in jobs.iter().zip(results) {
        match res {
            Ok(values) => out[zi].records.push(ReplicateRecord { replicate: rep, values }),
            Err(e) => out[zi].failures.push((rep, e.to_string())),
        }
    }
    Ok(out)
}

/// Mean and standard error of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub mean: f64,
    pub se: f64,
}

/// Aggregates at one zeta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// `p/N`.
    pub zeta: f64,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub n_converged: usize,
    pub n_failed: usize,
    /// More than a fifth of the fits failed.
    pub flagged: bool,
    pub metrics: Vec<MetricSummary>,
}

impl SummaryRow {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub family: Family,
    pub nuisance0: Nuisance,
    pub rows: Vec<SummaryRow>,
}

/// Aggregates replicate statistics; failed fits are excluded.
pub fn summarize(family: Family, nuisance0: Nuisance, reps: &[ZetaReplicates], corrected: bool) -> SimulationSummary {
    let names = metric_names(family, corrected);
    let rows = reps
        .iter()
        .map(|z| {
            let metrics = names
                .iter()
                .enumerate()
                .map(|(k, name)| {
                    let vals: Vec<f64> = z.records.iter().map(|r| r.values[k]).collect();
                    let (mean, se) = mean_se(&vals);
                    MetricSummary { name: name.to_string(), mean, se }
                })
                .collect();
            let n_failed = z.failures.len();
            SummaryRow {
                zeta: z.p as f64 / z.n as f64,
                p: z.p,
                n: z.n,
                m: z.m,
                n_converged: z.records.len(),
                n_failed,
                flagged: 5 * n_failed > z.m,
                metrics,
            }
        })
        .collect();
    SimulationSummary { family, nuisance0, rows }
}

/// Runs a plan and aggregates it. With a correction table the summary also
/// carries corrected nuisance estimates.
pub fn run_plan(plan: &SimulationPlan, table: Option<&CorrectionTable>) -> Result<SimulationSummary> {
    let reps = run_replicates(plan, table)?;
    Ok(summarize(plan.family, plan.nuisance0, &reps, table.is_some()))
}
