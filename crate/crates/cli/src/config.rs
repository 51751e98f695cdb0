//! Run configuration (`version: 1`).

use anyhow::{bail, Context, Result};
use overfit_core::simlab::{BetaScale, SimulationPlan};
use overfit_core::{Covariance, Family, Nuisance};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<GenerateSection>,
    #[serde(default)]
    pub solve_rs: Option<SolveRsSection>,
    #[serde(default)]
    pub simulate: Option<SimulationPlan>,
    /// Correction table used by `simulate` (corrected columns) and
    /// `correct`.
    #[serde(default)]
    pub correction_table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub n: usize,
    pub p: usize,
    pub beta_scale: BetaScale,
    pub nuisance0: Nuisance,
    #[serde(default)]
    pub covariance: Covariance,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRsSection {
    pub family: Family,
    pub zeta_grid: Vec<f64>,
    #[serde(default)]
    pub theta0_grid: Option<Vec<f64>>,
    /// Solve at doubled quadrature order.
    #[serde(default)]
    pub doubled: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.version != VERSION {
            bail!("unsupported config version {} (expected {VERSION})", cfg.version);
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.out_dir.as_mut().map(resolve);
        cfg.correction_table.as_mut().map(resolve);
        Ok(cfg)
    }
}

/// Parses `lo:hi:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step): (f64, f64, f64) = (lo.trim().parse()?, hi.trim().parse()?, step.trim().parse()?);
            if !(step > 0.0) || hi < lo {
                bail!("range '{s}' needs lo <= hi and a positive step");
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| lo + k as f64 * step).map(|v| (v * 1e12).round() / 1e12).collect()
        }
        [_] => s.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>()?,
        _ => bail!("grid '{s}' is neither lo:hi:step nor a comma-separated list"),
    };
    if grid.is_empty() {
        bail!("grid '{s}' is empty");
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1,0.3, 0.5").unwrap(), vec![0.1, 0.3, 0.5]);
        let g = parse_grid("0.01:0.05:0.01").unwrap();
        assert_eq!(g, vec![0.01, 0.02, 0.03, 0.04, 0.05]);
        assert!(parse_grid("0.1:0.05:0.01").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"version":1,"bogus":2}"#).is_err());
        let nested = r#"{"version":1,"generate":{"n":10,"p":2,"beta_scale":{"signal":1.0},
            "nuisance0":{"family":"weibull","lambda":1.0,"rho":2.0,"extra":0}}}"#;
        assert!(serde_json::from_str::<RunConfig>(nested).is_err());
        let ok = nested.replace(r#","extra":0"#, "");
        assert!(serde_json::from_str::<RunConfig>(&ok).is_ok());
    }
}
