//! Bias-correction curves from the RS solutions and corrected estimates.
//!
//! For the location-scale families the limits of the ML noise parameters
//! satisfy `sigma*/sigma0 = f(zeta)` and `(phi* - phi0)/sigma0 = g(zeta)`
//! independently of the signal strength, so the estimates are corrected by
//! `sigma~ = sigma^/f`, `phi~ = phi^ - sigma^ g/f` while the log-linear
//! regression coefficients are left untouched. For the frailty family the
//! limit of the variance estimate depends on the true variance; the table
//! stores one curve per true variance and estimates are corrected by
//! inverting the curve family at the observed zeta.

mod io;

pub use io::{read_table_csv, load_table_csv, save_table_csv, write_table_csv};

use crate::error::{Error, Result};
use crate::mle::MLEstimate;
use crate::models::{Family, LogLinearForm};
use crate::numerics::{bisect, Pchip};
use crate::rs::{sweep_rs_frailty, sweep_rs_loglogistic, sweep_rs_weibull, RsConfig, RsSolution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Limit of the frailty-variance estimate as a function of zeta for one
/// true variance, on the table grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCurve {
    pub theta0: f64,
    pub theta_star: Vec<f64>,
    /// `phi* - phi0` on the grid.
    pub phi_shift: Vec<f64>,
}

/// A grid point left out of a table because its solve failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub zeta: f64,
    pub theta0: Option<f64>,
    pub reason: String,
}

/// Correction curves on a zeta grid that starts at the classical point
/// `zeta = 0` (where `f = 1`, `g = 0`, `theta* = theta0`).
///
/// For the frailty family `f` is one and `g` zero throughout; the intercept
/// shifts are stored per curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTable {
    pub family: Family,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub theta_curves: Option<Vec<ThetaCurve>>,
    #[serde(default)]
    pub failures: Vec<GridFailure>,
}

fn usable(sol: &Result<RsSolution>) -> std::result::Result<&RsSolution, String> {
    match sol {
        Ok(s) if s.converged => Ok(s),
        Ok(s) => Err(format!("solution at zeta {} failed the quadrature certification", s.zeta)),
        Err(e) => Err(e.to_string()),
    }
}

fn check_grid(zetas: &[f64]) -> Result<Vec<f64>> {
    if zetas.is_empty() {
        return Err(Error::InvalidInput("zeta grid is empty".into()));
    }
    let mut grid = zetas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
        return Err(Error::InvalidInput("zeta grid values must lie in (0, 1)".into()));
    }
    Ok(grid)
}

fn check_theta0s(family: Family, theta0_grid: Option<&[f64]>) -> Result<Vec<f64>> {
    if family != Family::ExpGammaFrailty {
        return Ok(Vec::new());
    }
    let mut theta0s = theta0_grid
        .filter(|t| !t.is_empty())
        .ok_or_else(|| Error::InvalidInput("frailty tables need a grid of true variances".into()))?
        .to_vec();
    theta0s.sort_by(f64::total_cmp);
    theta0s.dedup();
    if theta0s.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::InvalidInput("true variances must be positive".into()));
    }
    Ok(theta0s)
}

/// RS solutions behind a correction table, on the sorted grids.
#[derive(Debug)]
pub struct GridSolutions {
    pub family: Family,
    pub zetas: Vec<f64>,
    /// Empty for the location-scale families.
    pub theta0s: Vec<f64>,
    /// One sweep over `zetas` per true variance (a single sweep for the
    /// location-scale families).
    pub sweeps: Vec<Vec<Result<RsSolution>>>,
}

/// Solves the RS equations on `zeta_grid`, and for the frailty family on
/// every true variance of `theta0_grid` (in parallel).
pub fn solve_correction_grid(
    family: Family,
    zeta_grid: &[f64],
    theta0_grid: Option<&[f64]>,
    cfg: &RsConfig,
) -> Result<GridSolutions> {
    let zetas = check_grid(zeta_grid)?;
    let theta0s = check_theta0s(family, theta0_grid)?;
    let sweeps = match family {
        Family::WeibullPH => vec![sweep_rs_weibull(&zetas, cfg)?],
        Family::LogLogisticAFT => vec![sweep_rs_loglogistic(&zetas, cfg)?],
        Family::ExpGammaFrailty => {
            let sweeps: Vec<Result<Vec<Result<RsSolution>>>> =
                theta0s.par_iter().map(|&t| sweep_rs_frailty(&zetas, t, cfg)).collect();
            sweeps.into_iter().collect::<Result<_>>()?
        }
    };
    Ok(GridSolutions { family, zetas, theta0s, sweeps })
}

impl GridSolutions {
    /// Tabulates the corrections. Failed grid points are dropped and listed
    /// in `failures`; for the frailty family a zeta is kept only when every
    /// curve solved there.
    pub fn table(&self) -> CorrectionTable {
        let family = self.family;
        let mut failures = Vec::new();
        let mut grid = vec![0.0];
        if family != Family::ExpGammaFrailty {
            let (mut f, mut g) = (vec![1.0], vec![0.0]);
            for (&zeta, sol) in self.zetas.iter().zip(&self.sweeps[0]) {
                match usable(sol) {
                    Ok(s) => {
                        grid.push(zeta);
                        f.push(s.f());
                        g.push(s.g());
                    }
                    Err(reason) => failures.push(GridFailure { zeta, theta0: None, reason }),
                }
            }
            return CorrectionTable { family, grid, f, g, theta_curves: None, failures };
        }
        let mut curves: Vec<ThetaCurve> = self
            .theta0s
            .iter()
            .map(|&theta0| ThetaCurve { theta0, theta_star: vec![theta0], phi_shift: vec![0.0] })
            .collect();
        for (k, &zeta) in self.zetas.iter().enumerate() {
            let mut ok = true;
            for (sweep, &theta0) in self.sweeps.iter().zip(&self.theta0s) {
                if let Err(reason) = usable(&sweep[k]) {
                    failures.push(GridFailure { zeta, theta0: Some(theta0), reason });
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            grid.push(zeta);
            for (curve, sweep) in curves.iter_mut().zip(&self.sweeps) {
                let s = sweep[k].as_ref().expect("checked above");
                curve.theta_star.push(s.nuisance_star.theta.unwrap_or(0.0));
                curve.phi_shift.push(s.g());
            }
        }
        let n = grid.len();
        CorrectionTable { family, grid, f: vec![1.0; n], g: vec![0.0; n], theta_curves: Some(curves), failures }
    }
}

/// Solves the RS equations on `zeta_grid` and tabulates the corrections.
/// Frailty tables need `theta0_grid`, the true variances whose curves are
/// tabulated. Failed grid points are dropped and listed in `failures`.
pub fn build_correction_table(
    family: Family,
    zeta_grid: &[f64],
    theta0_grid: Option<&[f64]>,
    cfg: &RsConfig,
) -> Result<CorrectionTable> {
    Ok(solve_correction_grid(family, zeta_grid, theta0_grid, cfg)?.table())
}

impl CorrectionTable {
    fn interp(&self, ys: &[f64], zeta: f64) -> Result<f64> {
        if self.grid.len() < 2 {
            return Err(Error::OutOfRange("correction table has no solved grid points".into()));
        }
        Pchip::new(&self.grid, ys)?.eval(zeta)
    }

    /// `sigma*/sigma0` at `zeta`, interpolated monotonically.
    pub fn f_at(&self, zeta: f64) -> Result<f64> {
        self.interp(&self.f, zeta)
    }

    /// `(phi* - phi0)/sigma0` at `zeta`, interpolated monotonically.
    pub fn g_at(&self, zeta: f64) -> Result<f64> {
        self.interp(&self.g, zeta)
    }

    fn curves(&self) -> Result<&[ThetaCurve]> {
        self.theta_curves
            .as_deref()
            .filter(|c| !c.is_empty())
            .ok_or_else(|| Error::InvalidInput("table has no frailty-variance curves".into()))
    }

    /// Limit of the variance estimate at `zeta` for each tabulated true
    /// variance, as `(theta0, theta*)` pairs.
    pub fn theta_star_at(&self, zeta: f64) -> Result<Vec<(f64, f64)>> {
        self.curves()?.iter().map(|c| Ok((c.theta0, self.interp(&c.theta_star, zeta)?.max(0.0)))).collect()
    }

    /// Checks the structural requirements of a table.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n < 2 || self.f.len() != n || self.g.len() != n {
            return Err(Error::InvalidInput("table columns must have equal length of at least two".into()));
        }
        if self.grid[0] != 0.0 || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("table grid must start at 0 and increase strictly".into()));
        }
        if self.f.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::InvalidInput("f must be positive".into()));
        }
        if let Some(curves) = &self.theta_curves {
            if curves.iter().any(|c| c.theta_star.len() != n || c.phi_shift.len() != n) {
                return Err(Error::InvalidInput("frailty curves must match the grid".into()));
            }
        }
        Ok(())
    }
}

/// Corrected log-linear parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedLogLinear {
    pub varphi: Vec<f64>,
    pub phi: f64,
    pub sigma: f64,
}

/// Corrected native parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedNative {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub rho: f64,
}

/// Noise width of a location-scale estimate after checking families.
fn estimate_sigma(est: &MLEstimate, table: &CorrectionTable, family: Family) -> Result<f64> {
    if est.family() != Some(family) || table.family != family {
        return Err(Error::InvalidInput(format!(
            "estimate ({:?}) and table ({}) must both be {}",
            est.family(),
            table.family,
            family
        )));
    }
    let sigma = est.nuisance_hat.sigma.ok_or_else(|| Error::InvalidInput("estimate has no noise width".into()))?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("noise width estimate must be positive, got {sigma}")));
    }
    Ok(sigma)
}

/// `phi~ = phi^ - sigma^ g/f`, `sigma~ = sigma^/f`, `varphi~ = varphi^`.
pub fn correct_loglinear(est: &MLEstimate, table: &CorrectionTable, zeta: f64) -> Result<CorrectedLogLinear> {
    let family = table.family;
    if family == Family::ExpGammaFrailty {
        return Err(Error::InvalidInput("use correct_frailty for frailty estimates".into()));
    }
    let sigma = estimate_sigma(est, table, family)?;
    let (f, g) = (table.f_at(zeta)?, table.g_at(zeta)?);
    Ok(CorrectedLogLinear { varphi: est.beta_hat.clone(), phi: est.nuisance_hat.phi - sigma * g / f, sigma: sigma / f })
}

fn native_of(family: Family, c: &CorrectedLogLinear) -> Result<CorrectedNative> {
    let spec = crate::models::from_log_linear(&LogLinearForm {
        family,
        varphi: c.varphi.clone(),
        phi: c.phi,
        shape: c.sigma,
    })?;
    Ok(CorrectedNative { lambda: spec.nuisance0.lambda(), rho: spec.nuisance0.shape(), beta: spec.beta0 })
}

/// `beta~ = f beta^`, `lambda~ = lambda^ exp(-g/(f rho^))`, `rho~ = f rho^`.
pub fn correct_weibull_native(est: &MLEstimate, table: &CorrectionTable, zeta: f64) -> Result<CorrectedNative> {
    if table.family != Family::WeibullPH {
        return Err(Error::InvalidInput("Weibull correction needs a Weibull table".into()));
    }
    native_of(Family::WeibullPH, &correct_loglinear(est, table, zeta)?)
}

/// `beta~ = beta^`, `rho~ = f rho^`, `lambda~ = lambda^ exp(g/(f rho^))`
/// (the shift vanishes for this family).
pub fn correct_loglogistic_native(est: &MLEstimate, table: &CorrectionTable, zeta: f64) -> Result<CorrectedNative> {
    if table.family != Family::LogLogisticAFT {
        return Err(Error::InvalidInput("log-logistic correction needs a log-logistic table".into()));
    }
    native_of(Family::LogLogisticAFT, &correct_loglinear(est, table, zeta)?)
}

/// Estimates the true frailty variance from an estimate `theta_hat` at
/// `zeta` by solving `theta*(zeta; theta0) = theta_hat` on the monotone
/// interpolant of the tabulated curves.
pub fn invert_frailty_theta(theta_hat: f64, zeta: f64, table: &CorrectionTable) -> Result<f64> {
    if !(theta_hat >= 0.0) {
        return Err(Error::Domain(format!("variance estimate must be non-negative, got {theta_hat}")));
    }
    if theta_hat == 0.0 {
        return Err(Error::Boundary);
    }
    let pts = table.theta_star_at(zeta)?;
    if pts.len() < 2 {
        return Err(Error::InvalidInput("frailty inversion needs at least two curves".into()));
    }
    let (t0s, stars): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (lo, hi) = (stars[0], *stars.last().unwrap());
    if theta_hat < lo || theta_hat > hi {
        return Err(Error::OutOfRange(format!(
            "variance estimate {theta_hat} at zeta {zeta} lies outside the tabulated envelope [{lo}, {hi}]"
        )));
    }
    let curve = Pchip::new(&t0s, &stars)?;
    if let Some(k) = stars.iter().position(|&s| s == theta_hat) {
        return Ok(t0s[k]);
    }
    bisect(|t| curve.eval(t).unwrap_or(f64::NAN) - theta_hat, t0s[0], *t0s.last().unwrap(), 1e-12)
}

/// Corrected frailty parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedFrailty {
    pub varphi: Vec<f64>,
    pub phi: f64,
    pub theta0: f64,
}

/// Inverts the variance estimate and removes the intercept shift of the
/// matching curve (interpolated linearly between tabulated variances).
pub fn correct_frailty(est: &MLEstimate, table: &CorrectionTable, zeta: f64) -> Result<CorrectedFrailty> {
    if est.family() != Some(Family::ExpGammaFrailty) || table.family != Family::ExpGammaFrailty {
        return Err(Error::InvalidInput("frailty correction needs a frailty estimate and table".into()));
    }
    let theta_hat = est.nuisance_hat.theta.ok_or_else(|| Error::InvalidInput("estimate has no variance".into()))?;
    let theta0 = invert_frailty_theta(theta_hat, zeta, table)?;
    let curves = table.curves()?;
    let shifts: Vec<f64> = curves.iter().map(|c| table.interp(&c.phi_shift, zeta)).collect::<Result<_>>()?;
    let t0s: Vec<f64> = curves.iter().map(|c| c.theta0).collect();
    let k = t0s.partition_point(|&t| t <= theta0).clamp(1, t0s.len() - 1);
    let w = (theta0 - t0s[k - 1]) / (t0s[k] - t0s[k - 1]);
    let shift = shifts[k - 1] + w * (shifts[k] - shifts[k - 1]);
    Ok(CorrectedFrailty { varphi: est.beta_hat.clone(), phi: est.nuisance_hat.phi - shift, theta0 })
}
