//! Replica-symmetric order parameters of the ML estimator.
//!
//! Three levels of the theory are implemented:
//!
//! * [`solve_rs_generic`]: the general four-equation system for a model
//!   `p(t | x'beta, nuisance)`, averaging over the true linear predictor,
//!   an independent Gaussian and the data noise;
//! * [`solve_rs_linear`]: the reduced system for linear models with
//!   arbitrary additive noise, where the overlap equals the signal strength
//!   exactly;
//! * closed-form reductions for the log-linear Weibull, log-logistic and
//!   gamma-frailty models in rescaled variables ([`solve_rs_weibull`],
//!   [`solve_rs_loglogistic`], [`solve_rs_frailty`]).

mod frailty;
mod generic;
pub mod io;
mod linear;
mod loglogistic;
mod path;
pub mod rules;
mod weibull;

pub use io::{load_solutions_csv, read_solutions_csv, save_solutions_csv, write_solutions_csv};
pub use frailty::{frailty_theta_score_at_boundary, solve_rs_frailty, sweep_rs_frailty};
pub use generic::{solve_rs_generic, sweep_rs_generic, GenericModel};
pub use linear::{solve_rs_linear, sweep_rs_linear};
pub use loglogistic::{solve_rs_loglogistic, sweep_rs_loglogistic};
pub use weibull::{solve_rs_weibull, sweep_rs_weibull};

use crate::models::NoiseFamily;
use crate::numerics::FixedPointConfig;
use serde::{Deserialize, Serialize};

/// Numerical settings shared by the RS solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsConfig {
    /// Driver settings for the Newton-preconditioned fixed-point map.
    pub fixed_point: FixedPointConfig,
    /// Sup norm of the equation residuals required for convergence.
    pub residual_tol: f64,
    /// Cap on the sup norm of one Newton step in the solver's coordinates.
    pub max_newton_step: f64,
    /// Rule for averages over standard normals.
    pub gaussian: GaussianRule,
    /// Composite Gauss-Legendre panels and nodes per panel for noise
    /// averages.
    pub noise_panels: usize,
    pub noise_order: usize,
    /// Continuation starts at this zeta from the small-zeta asymptotics.
    pub path_start: f64,
    pub zeta_step: f64,
    pub min_zeta_step: f64,
}

impl Default for RsConfig {
    fn default() -> Self {
        Self {
            fixed_point: FixedPointConfig { damping: 1.0, max_iter: 100, tol: 1e-12, continuation_steps: 0 },
            residual_tol: 1e-9,
            max_newton_step: 1.0,
            gaussian: GaussianRule::Panels { panels: 12, order: 16 },
            noise_panels: 8,
            noise_order: 32,
            path_start: 0.01,
            zeta_step: 0.025,
            min_zeta_step: 1e-5,
        }
    }
}

impl RsConfig {
    /// The same settings with every quadrature order doubled.
    pub fn doubled(&self) -> Self {
        Self {
            gaussian: self.gaussian.doubled(),
            noise_order: (2 * self.noise_order).min(crate::numerics::MAX_ORDER),
            ..self.clone()
        }
    }

    /// Settings used by the generic solver, whose triple averages are more
    /// expensive.
    pub fn generic_default() -> Self {
        Self { gaussian: GaussianRule::Hermite { order: 32 }, noise_panels: 8, noise_order: 16, zeta_step: 0.05, ..Self::default() }
    }
}

impl RsConfig {
    pub(crate) fn gaussian_rule(&self) -> crate::error::Result<rules::Rule> {
        match self.gaussian {
            GaussianRule::Hermite { order } => rules::gaussian(order),
            GaussianRule::Panels { panels, order } => rules::gaussian_panels(panels, order),
        }
    }

    pub(crate) fn noise_rule(&self, noise: NoiseFamily, theta0: f64) -> crate::error::Result<rules::Rule> {
        rules::noise(noise, theta0, self.noise_panels, self.noise_order)
    }
}

/// Quadrature for standard normal averages.
///
/// Gauss-Hermite rules are efficient for smooth integrands; composite
/// Gauss-Legendre panels on `[-12, 12]` stay accurate when the integrands
/// develop sharp transitions, as they do at large zeta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianRule {
    Hermite { order: usize },
    Panels { panels: usize, order: usize },
}

impl GaussianRule {
    fn doubled(self) -> Self {
        let max = crate::numerics::MAX_ORDER;
        match self {
            Self::Hermite { order } => Self::Hermite { order: (2 * order).min(max) },
            Self::Panels { panels, order } => Self::Panels { panels, order: (2 * order).min(max) },
        }
    }
}

/// Which system produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RsModel {
    Weibull,
    LogLogistic,
    Frailty { theta0: f64 },
    Linear { noise: NoiseFamily },
    Generic { noise: NoiseFamily },
}

/// Rescaled order parameters: `(u/sigma, v/sigma, sigma/sigma0,
/// (phi - phi0)/sigma)` for the location-scale models and
/// `(u, v, phi - phi0, theta)` for the frailty model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Limiting nuisance parameters relative to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceStar {
    /// `(phi* - phi0) / sigma0` (`sigma0 = 1` for frailty).
    pub phi_shift: f64,
    /// `sigma* / sigma0` for location-scale noise.
    pub sigma_ratio: Option<f64>,
    /// `theta*` for frailty noise.
    pub theta: Option<f64>,
}

/// Solution of an RS system at one `zeta`.
///
/// The specialized and linear solvers describe the log-linear coefficients
/// `varphi`, so `w_over_s` is one. The generic solver describes the
/// coefficients of its own response model (for Weibull data the native
/// `beta`, whose slope is `sigma0/sigma*`).
///
/// For the Weibull and log-logistic reductions `v_star` and `u_star` are
/// expressed in units of the true noise width (`sigma0 = 1`); use
/// [`RsSolution::with_sigma0`] to rescale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsSolution {
    pub model: RsModel,
    pub zeta: f64,
    /// `w* / S`.
    pub w_over_s: f64,
    pub v_star: f64,
    pub u_star: f64,
    pub nuisance_star: NuisanceStar,
    pub rescaled: Rescaled,
    /// Sup norm of the equation residuals at the returned point.
    pub residual: f64,
    pub converged: bool,
    /// The frailty variance is pinned at zero.
    pub boundary: bool,
    /// `E[tanh x*]` for the log-logistic and frailty reductions.
    pub mean_tanh: Option<f64>,
}

impl RsSolution {
    /// Copy with `v_star` and `u_star` expressed for noise width `sigma0`.
    pub fn with_sigma0(&self, sigma0: f64) -> Self {
        Self { v_star: self.v_star * sigma0, u_star: self.u_star * sigma0, ..self.clone() }
    }

    /// Correction factor `f = sigma*/sigma0` (one for frailty).
    pub fn f(&self) -> f64 {
        self.nuisance_star.sigma_ratio.unwrap_or(1.0)
    }

    /// Correction shift `g = (phi* - phi0)/sigma0`.
    pub fn g(&self) -> f64 {
        self.nuisance_star.phi_shift
    }
}

/// Predicted slope and width of the scatter of estimated against true
/// coefficients: `kappa = w*/S`, `delta = v*/sqrt(p)`.
pub fn rs_to_scatter_stats(sol: &RsSolution, p: usize) -> (f64, f64) {
    (sol.w_over_s, sol.v_star / (p as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_stats_and_rescaling() {
        let sol = RsSolution {
            model: RsModel::Weibull,
            zeta: 0.3,
            w_over_s: 1.0,
            v_star: 0.8,
            u_star: 0.6,
            nuisance_star: NuisanceStar { phi_shift: 0.1, sigma_ratio: Some(0.8), theta: None },
            rescaled: Rescaled { a: 0.75, b: 1.0, c: 0.8, d: 0.125 },
            residual: 0.0,
            converged: true,
            boundary: false,
            mean_tanh: None,
        };
        let (kappa, delta) = rs_to_scatter_stats(&sol, 16);
        assert_eq!(kappa, 1.0);
        assert!((delta - 0.2).abs() < 1e-15);
        let scaled = sol.with_sigma0(2.0);
        assert_eq!((scaled.v_star, scaled.u_star), (1.6, 1.2));
        assert_eq!((sol.f(), sol.g()), (0.8, 0.1));
    }

    #[test]
    fn doubled_config_doubles_orders() {
        let cfg = RsConfig::default();
        let d = cfg.doubled();
        assert_eq!(d.noise_order, 2 * cfg.noise_order);
        assert_eq!(d.gaussian, GaussianRule::Panels { panels: 12, order: 32 });
    }
}
