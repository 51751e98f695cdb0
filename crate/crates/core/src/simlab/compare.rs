//! Simulation summaries against RS predictions.

use super::{SimulationSummary, SummaryRow};
use crate::error::{Error, Result};
use crate::models::{to_log_linear, Family, NoiseFamily, Nuisance};
use crate::numerics::Pchip;
use crate::rs::{RsModel, RsSolution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub name: String,
    pub sim: f64,
    pub se: f64,
    pub theory: f64,
    /// `(sim - theory)/se`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub zeta: f64,
    pub p: usize,
    pub metrics: Vec<MetricComparison>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub family: Family,
    pub rows: Vec<ComparisonRow>,
    /// Every `|z| <= 3`.
    pub pass: bool,
}

/// Theory quantities at one zeta: `(b, c, d-or-theta, phi_shift, f)` in
/// the rescaled convention.
#[derive(Debug, Clone, Copy)]
struct TheoryPoint {
    b: f64,
    c: f64,
    phi_shift: f64,
    theta: f64,
}

fn model_matches(model: RsModel, nuisance0: &Nuisance) -> bool {
    match (model, nuisance0) {
        (RsModel::Weibull | RsModel::Linear { noise: NoiseFamily::Gumbel }, Nuisance::Weibull { .. }) => true,
        (RsModel::LogLogistic | RsModel::Linear { noise: NoiseFamily::Logistic }, Nuisance::LogLogistic { .. }) => true,
        (RsModel::Frailty { theta0 }, Nuisance::Frailty { theta, .. }) => (theta0 - theta).abs() <= 1e-12,
        (RsModel::Linear { noise: NoiseFamily::GammaFrailty }, Nuisance::Frailty { .. }) => true,
        _ => false,
    }
}

fn theory_at(sols: &[&RsSolution], zeta: f64) -> Result<TheoryPoint> {
    let point = |s: &RsSolution| TheoryPoint {
        b: s.rescaled.b,
        c: s.rescaled.c,
        phi_shift: s.nuisance_star.phi_shift,
        theta: s.nuisance_star.theta.unwrap_or(f64::NAN),
    };
    if let Some(s) = sols.iter().find(|s| (s.zeta - zeta).abs() <= 1e-12) {
        return Ok(point(s));
    }
    if sols.len() < 2 {
        return Err(Error::OutOfRange(format!("no theory value at zeta {zeta}")));
    }
    let zs: Vec<f64> = sols.iter().map(|s| s.zeta).collect();
    let interp = |f: &dyn Fn(&TheoryPoint) -> f64| -> Result<f64> {
        let ys: Vec<f64> = sols.iter().map(|s| f(&point(s))).collect();
        Pchip::new(&zs, &ys)?.eval(zeta)
    };
    Ok(TheoryPoint {
        b: interp(&|t| t.b)?,
        c: interp(&|t| t.c)?,
        phi_shift: interp(&|t| t.phi_shift)?,
        theta: interp(&|t| t.theta)?,
    })
}

fn theory_value(name: &str, family: Family, t: &TheoryPoint, sigma0: f64, p: usize) -> Option<f64> {
    let sqrt_p = (p as f64).sqrt();
    let frailty = family == Family::ExpGammaFrailty;
    // Log-linear fluctuation width in data units.
    let v_ll = if frailty { t.b } else { t.b * t.c * sigma0 };
    Some(match name {
        "kappa" => 1.0,
        "delta" => v_ll / sqrt_p,
        "kappa_native" if family == Family::WeibullPH => 1.0 / t.c,
        "kappa_native" => 1.0,
        "delta_native" if family == Family::WeibullPH => t.b / sqrt_p,
        "delta_native" => v_ll / sqrt_p,
        "sigma_ratio" => t.c,
        "phi_shift" => t.phi_shift,
        "theta_hat" => t.theta,
        "sigma_ratio_corr" | "rho_ratio_corr" | "kappa_native_corr" => 1.0,
        "phi_shift_corr" => 0.0,
        _ => return None,
    })
}

fn z_score(sim: f64, se: f64, theory: f64) -> f64 {
    let d = sim - theory;
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Compares each summary row with RS predictions interpolated (monotone
/// cubic) from `theory` at the row's `zeta = p/N`. Statistics without a
/// prediction (the `lambda` and uncorrected `rho` ratios) are skipped.
pub fn compare_to_theory(summary: &SimulationSummary, theory: &[RsSolution]) -> Result<Comparison> {
    let mut sols: Vec<&RsSolution> = theory.iter().filter(|s| s.converged).collect();
    if sols.is_empty() {
        return Err(Error::InvalidInput("no converged theory values".into()));
    }
    if let Some(bad) = sols.iter().find(|s| !model_matches(s.model, &summary.nuisance0)) {
        return Err(Error::InvalidInput(format!(
            "theory model {:?} does not match the simulated {} model",
            bad.model, summary.family
        )));
    }
    sols.sort_by(|a, b| a.zeta.total_cmp(&b.zeta));
    sols.dedup_by(|a, b| a.zeta == b.zeta);
    let sigma0 = to_log_linear(&[], &summary.nuisance0).shape;
    let rows = summary
        .rows
        .iter()
        .map(|row: &SummaryRow| {
            let t = theory_at(&sols, row.zeta)?;
            let metrics: Vec<MetricComparison> = row
                .metrics
                .iter()
                .filter_map(|m| {
                    let theory = theory_value(&m.name, summary.family, &t, sigma0, row.p)?;
                    Some(MetricComparison {
                        name: m.name.clone(),
                        sim: m.mean,
                        se: m.se,
                        theory,
                        z: z_score(m.mean, m.se, theory),
                    })
                })
                .collect();
            let pass = metrics.iter().all(|m| m.z.abs() <= 3.0);
            Ok(ComparisonRow { zeta: row.zeta, p: row.p, metrics, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(Comparison { family: summary.family, rows, pass })
}
