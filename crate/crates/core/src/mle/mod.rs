//! Maximum-likelihood fitting in the log-linear parameterization.

mod newton;
mod objective;

pub use newton::{fit, fit_log_linear, loglik_grad_hess, moment_start};
pub use objective::{Evaluation, HessianAction, Objective};

use crate::error::Result;
use crate::models::{from_log_linear, Family, LogLinearForm, ModelSpec, NoiseFamily};
use serde::{Deserialize, Serialize};

/// Options for [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence when the sup norm of the gradient is at most
    /// `grad_tol * N`.
    pub grad_tol: f64,
    /// Divergence is reported once any regression coefficient exceeds this
    /// bound in absolute value.
    pub beta_bound: f64,
    /// Hold the noise width at this value (location-scale families only).
    pub fixed_sigma: Option<f64>,
    /// Starting point in the log-linear scale `(varphi, phi, shape)`;
    /// defaults to `varphi = 0` and moment estimates of the nuisances.
    pub start: Option<(Vec<f64>, f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-8, beta_bound: 1e4, fixed_sigma: None, start: None }
    }
}

/// Fitted nuisance parameters on the log-linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceHat {
    pub phi: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
}

impl NuisanceHat {
    /// `sigma` or `theta`.
    pub fn shape(&self) -> f64 {
        self.sigma.or(self.theta).unwrap_or(f64::NAN)
    }
}

/// Result of one ML fit. `beta_hat` holds the log-linear coefficients
/// `varphi`; [`MLEstimate::native`] maps back to the family's own
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLEstimate {
    pub noise: NoiseFamily,
    pub beta_hat: Vec<f64>,
    pub nuisance_hat: NuisanceHat,
    /// Log-likelihood of the event times `t`.
    pub loglik: f64,
    /// Sup norm of the gradient in the optimizer's parameterization.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n: usize,
    pub p: usize,
}

impl MLEstimate {
    pub fn family(&self) -> Option<Family> {
        match self.noise {
            NoiseFamily::Gumbel => Some(Family::WeibullPH),
            NoiseFamily::Logistic => Some(Family::LogLogisticAFT),
            NoiseFamily::GammaFrailty => Some(Family::ExpGammaFrailty),
            NoiseFamily::Gaussian => None,
        }
    }

    pub fn zeta(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn log_linear(&self) -> Option<LogLinearForm> {
        Some(LogLinearForm {
            family: self.family()?,
            varphi: self.beta_hat.clone(),
            phi: self.nuisance_hat.phi,
            shape: self.nuisance_hat.shape(),
        })
    }

    /// Native parameters `(beta, lambda, rho | theta)` of the fitted family.
    pub fn native(&self) -> Result<ModelSpec> {
        let form = self.log_linear().ok_or_else(|| {
            crate::Error::InvalidInput("the Gaussian test family has no native parameterization".into())
        })?;
        from_log_linear(&form)
    }
}
