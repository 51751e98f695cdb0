use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The three parametric survival families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Weibull proportional hazards.
    #[serde(rename = "weibull")]
    WeibullPH,
    /// Log-logistic accelerated failure time.
    #[serde(rename = "loglogistic")]
    LogLogisticAFT,
    /// Exponential hazard with a multiplicative gamma frailty.
    #[serde(rename = "frailty")]
    ExpGammaFrailty,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::WeibullPH => "weibull",
            Family::LogLogisticAFT => "loglogistic",
            Family::ExpGammaFrailty => "frailty",
        }
    }

    /// Noise law of `Y = -log T` after the log-linear transform.
    pub fn noise(self) -> NoiseFamily {
        match self {
            Family::WeibullPH => NoiseFamily::Gumbel,
            Family::LogLogisticAFT => NoiseFamily::Logistic,
            Family::ExpGammaFrailty => NoiseFamily::GammaFrailty,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weibull" | "weibull_ph" => Ok(Family::WeibullPH),
            "loglogistic" | "log_logistic" | "log-logistic" => Ok(Family::LogLogisticAFT),
            "frailty" | "exp_gamma_frailty" | "gamma_frailty" => Ok(Family::ExpGammaFrailty),
            other => Err(Error::InvalidInput(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Noise distributions of the log-linear form `Y = x'varphi + Z`.
///
/// For the location-scale members `Z = phi + sigma * eps` where `eps` has
/// the standardized density:
///
/// * `Gumbel`: `exp(-e - exp(-e))` (log-linear Weibull);
/// * `Logistic`: `exp(-e) / (1 + exp(-e))^2`;
/// * `Gaussian`: standard normal (used as a test family).
///
/// `GammaFrailty` has `Z = phi - log(s)` where `s` has density
/// `(1 + theta s)^-(1 + 1/theta)` on `s > 0` (unit exponential when
/// `theta = 0`); its scale is fixed and `theta` plays the role of the
/// nuisance shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gumbel,
    Logistic,
    GammaFrailty,
    Gaussian,
}

impl NoiseFamily {
    pub fn is_location_scale(self) -> bool {
        !matches!(self, NoiseFamily::GammaFrailty)
    }
}

/// Native nuisance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Nuisance {
    #[serde(rename = "weibull")]
    Weibull { lambda: f64, rho: f64 },
    #[serde(rename = "loglogistic")]
    LogLogistic { lambda: f64, rho: f64 },
    #[serde(rename = "frailty")]
    Frailty { lambda: f64, theta: f64 },
}

impl Nuisance {
    pub fn family(&self) -> Family {
        match self {
            Nuisance::Weibull { .. } => Family::WeibullPH,
            Nuisance::LogLogistic { .. } => Family::LogLogisticAFT,
            Nuisance::Frailty { .. } => Family::ExpGammaFrailty,
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Nuisance::Weibull { lambda, .. } | Nuisance::LogLogistic { lambda, .. } | Nuisance::Frailty { lambda, .. } => lambda,
        }
    }

    /// `rho` for Weibull and log-logistic, `theta` for frailty.
    pub fn shape(&self) -> f64 {
        match *self {
            Nuisance::Weibull { rho, .. } | Nuisance::LogLogistic { rho, .. } => rho,
            Nuisance::Frailty { theta, .. } => theta,
        }
    }

    pub fn new(family: Family, lambda: f64, shape: f64) -> Result<Self> {
        let n = match family {
            Family::WeibullPH => Nuisance::Weibull { lambda, rho: shape },
            Family::LogLogisticAFT => Nuisance::LogLogistic { lambda, rho: shape },
            Family::ExpGammaFrailty => Nuisance::Frailty { lambda, theta: shape },
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        let lambda = self.lambda();
        let shape = self.shape();
        let ok = lambda > 0.0
            && lambda.is_finite()
            && shape.is_finite()
            && match self {
                Nuisance::Frailty { .. } => shape >= 0.0,
                _ => shape > 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid nuisance parameters {self:?}")))
        }
    }
}

/// Weibull `lambda` giving `E[T | x'beta = 0] = 1` for shape `rho`.
pub fn weibull_unit_mean_lambda(rho: f64) -> f64 {
    statrs::function::gamma::gamma(1.0 + 1.0 / rho)
}

/// A family together with its true parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub beta0: Vec<f64>,
    #[serde(flatten)]
    pub nuisance0: Nuisance,
}

impl ModelSpec {
    pub fn new(beta0: Vec<f64>, nuisance0: Nuisance) -> Result<Self> {
        nuisance0.validate()?;
        if beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("beta0 must be finite".into()));
        }
        Ok(Self { beta0, nuisance0 })
    }

    pub fn family(&self) -> Family {
        self.nuisance0.family()
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }

    /// `S^2 = beta0' beta0`.
    pub fn s_squared(&self) -> f64 {
        self.beta0.iter().map(|b| b * b).sum()
    }

    pub fn to_log_linear(&self) -> LogLinearForm {
        to_log_linear(&self.beta0, &self.nuisance0)
    }
}

/// Parameters of `Y = -log T = x'varphi + Z`.
///
/// `shape` is the noise width `sigma` for the Weibull and log-logistic
/// families and the frailty variance `theta` for the frailty family (whose
/// noise has unit scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLinearForm {
    pub family: Family,
    pub varphi: Vec<f64>,
    pub phi: f64,
    pub shape: f64,
}

impl LogLinearForm {
    pub fn sigma(&self) -> Option<f64> {
        (self.family != Family::ExpGammaFrailty).then_some(self.shape)
    }

    pub fn theta(&self) -> Option<f64> {
        (self.family == Family::ExpGammaFrailty).then_some(self.shape)
    }
}

/// Maps native parameters to the log-linear form.
///
/// * Weibull: `sigma = 1/rho`, `phi = log(lambda)`, `varphi = beta / rho`.
/// * Log-logistic: `sigma = 1/rho`, `phi = -log(lambda)`, `varphi = beta`.
/// * Frailty: `theta = theta`, `phi = log(lambda)`, `varphi = beta`.
pub fn to_log_linear(beta: &[f64], nuisance: &Nuisance) -> LogLinearForm {
    match *nuisance {
        Nuisance::Weibull { lambda, rho } => LogLinearForm {
            family: Family::WeibullPH,
            varphi: beta.iter().map(|b| b / rho).collect(),
            phi: lambda.ln(),
            shape: 1.0 / rho,
        },
        Nuisance::LogLogistic { lambda, rho } => LogLinearForm {
            family: Family::LogLogisticAFT,
            varphi: beta.to_vec(),
            phi: -lambda.ln(),
            shape: 1.0 / rho,
        },
        Nuisance::Frailty { lambda, theta } => LogLinearForm {
            family: Family::ExpGammaFrailty,
            varphi: beta.to_vec(),
            phi: lambda.ln(),
            shape: theta,
        },
    }
}

/// Inverse of [`to_log_linear`].
pub fn from_log_linear(form: &LogLinearForm) -> Result<ModelSpec> {
    let (beta, nuisance) = match form.family {
        Family::WeibullPH => {
            let rho = 1.0 / form.shape;
            (form.varphi.iter().map(|v| v * rho).collect(), Nuisance::Weibull { lambda: form.phi.exp(), rho })
        }
        Family::LogLogisticAFT => (
            form.varphi.clone(),
            Nuisance::LogLogistic { lambda: (-form.phi).exp(), rho: 1.0 / form.shape },
        ),
        Family::ExpGammaFrailty => (form.varphi.clone(), Nuisance::Frailty { lambda: form.phi.exp(), theta: form.shape }),
    };
    ModelSpec::new(beta, nuisance)
}
