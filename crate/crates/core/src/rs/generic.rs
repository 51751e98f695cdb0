//! The general four-equation system for a model `p(t | x'beta, nuisance)`.
//!
//! With `Z0, Q` independent standard normals, `T | Z0 ~ p(. | S Z0,
//! nuisance0)`, `nu = v Q + w Z0` and the proximal point
//! `xi = argmin 0.5((xi - nu)/u)^2 - log p(T | xi, nuisance)`, the order
//! parameters solve
//!
//! ```text
//! E[(xi - nu)^2]                              = zeta v^2
//! E[1 / (1 - u^2 d2/dxi2 log p(T | xi))]      = 1 - zeta
//! E[xi d/dZ0 log p(T | S Z0, nuisance0)]      = zeta w
//! E[grad_nuisance log p(T | xi, nuisance)]    = 0
//! ```
//!
//! The second equation uses the closed form `d xi / d nu = 1/(1 + u^2 h'')`
//! of the proximal map. Responses are generated through the log-linear
//! representation `-log T = phi + k(shape) x'beta + noise`, where `k` is the
//! noise width for the Weibull model and one otherwise; the log-density of
//! `-log T` differs from that of `T` by a parameter-free Jacobian, so all
//! derivatives coincide.

use super::linear::noise_terms;
use super::path::{certified_sweep, PathPoint};
use super::rules::{self, Rule};
use super::{NuisanceStar, Rescaled, RsConfig, RsModel, RsSolution};
use crate::error::{Error, Result};
use crate::models::{to_log_linear, NoiseFamily, Nuisance};
use crate::numerics::{prox_minimize, Derivs};
use serde::{Deserialize, Serialize};

/// Data-generating model for the general equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenericModel {
    /// One of the survival families with its true nuisance parameters.
    Survival { nuisance0: Nuisance },
    /// Linear regression with Gaussian noise; the noise scale is either
    /// estimated or held at its true value.
    Gaussian { sigma0: f64, known_scale: bool },
}

impl GenericModel {
    fn noise(&self) -> NoiseFamily {
        match self {
            Self::Survival { nuisance0 } => nuisance0.family().noise(),
            Self::Gaussian { .. } => NoiseFamily::Gaussian,
        }
    }

    /// `(phi0, shape0)` of the log-linear noise.
    fn log_linear_truth(&self) -> (f64, f64) {
        match self {
            Self::Survival { nuisance0 } => {
                let form = to_log_linear(&[], nuisance0);
                (form.phi, form.shape)
            }
            Self::Gaussian { sigma0, .. } => (0.0, *sigma0),
        }
    }

    fn shape_free(&self) -> bool {
        !matches!(self, Self::Gaussian { known_scale: true, .. })
    }

    /// Slope of the log-linear location in the model's linear predictor.
    fn slope_is_scale(&self) -> bool {
        matches!(self, Self::Survival { nuisance0: Nuisance::Weibull { .. } })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Survival { nuisance0 } => nuisance0.validate(),
            Self::Gaussian { sigma0, .. } if sigma0.is_finite() && *sigma0 > 0.0 => Ok(()),
            Self::Gaussian { sigma0, .. } => Err(Error::Domain(format!("sigma0 must be positive, got {sigma0}"))),
        }
    }
}

struct GenericSystem {
    model: GenericModel,
    noise: NoiseFamily,
    s: f64,
    phi0: f64,
    shape0: f64,
    z0: Rule,
    q: Rule,
    e: Rule,
}

/// Log-density of `y = -log T` with derivatives in the linear predictor
/// and the log-linear nuisance `(phi, shape)`.
struct Terms {
    d1: f64,
    d2: f64,
    d_phi: f64,
    d_shape: f64,
}

impl GenericSystem {
    fn new(cfg: &RsConfig, s: f64, model: GenericModel) -> Result<Self> {
        let noise = model.noise();
        let (phi0, shape0) = model.log_linear_truth();
        let theta0 = if noise == NoiseFamily::GammaFrailty { shape0 } else { 0.0 };
        Ok(Self {
            model,
            noise,
            s,
            phi0,
            shape0,
            z0: cfg.gaussian_rule()?,
            q: cfg.gaussian_rule()?,
            e: cfg.noise_rule(noise, theta0)?,
        })
    }

    fn slope(&self, shape: f64) -> (f64, f64) {
        if self.model.slope_is_scale() {
            (shape, 1.0)
        } else {
            (1.0, 0.0)
        }
    }

    fn terms(&self, y: f64, xi: f64, phi: f64, shape: f64) -> Terms {
        let (k, dk) = self.slope(shape);
        let t = noise_terms(self.noise, y - k * xi, phi, shape);
        Terms { d1: -k * t.d1, d2: k * k * t.d2, d_phi: t.d_location, d_shape: t.d_shape - dk * xi * t.d1 }
    }

    /// Response `y = -log T` for the true linear predictor and standardized
    /// noise draw `e`.
    fn response(&self, eta0: f64, e: f64) -> f64 {
        let (k0, _) = self.slope(self.shape0);
        let noise = if self.noise == NoiseFamily::GammaFrailty { e } else { self.shape0 * e };
        self.phi0 + k0 * eta0 + noise
    }

    /// Score of the true density in its linear predictor at noise draw `e`.
    fn true_score(&self, e: f64) -> f64 {
        let (k0, _) = self.slope(self.shape0);
        let y = self.response(0.0, e);
        -k0 * noise_terms(self.noise, y, self.phi0, self.shape0).d1
    }

    /// `[E(xi-nu)^2/v^2, E 1/(1+u^2 h''), E xi score, E d_phi, E d_shape]`.
    fn moments(&self, w: f64, v: f64, u: f64, phi: f64, shape: f64) -> Result<[f64; 5]> {
        let failed = std::sync::atomic::AtomicBool::new(false);
        let m = self.z0.par_mean(|z0| {
            let eta0 = self.s * z0;
            self.e.mean_array(|e| {
                let y = self.response(eta0, e);
                let score = self.true_score(e);
                self.q.mean_array(|q| {
                    let nu = v * q + w * z0;
                    let h = |xi: f64| {
                        let t = self.terms(y, xi, phi, shape);
                        Derivs { value: 0.0, d1: -t.d1, d2: -t.d2 }
                    };
                    match prox_minimize(nu, u, h) {
                        Ok(xi) => {
                            let t = self.terms(y, xi, phi, shape);
                            let dev = (xi - nu) / v;
                            [dev * dev, 1.0 / (1.0 - u * u * t.d2), xi * score, t.d_phi, shape * t.d_shape]
                        }
                        Err(_) => {
                            failed.store(true, std::sync::atomic::Ordering::Relaxed);
                            [0.0; 5]
                        }
                    }
                })
            })
        });
        if failed.into_inner() {
            return Err(Error::NonFinite("prox evaluation in RS equations".into()));
        }
        Ok(m)
    }

    /// Unknowns `(w/S, ln v, ln u, phi[, ln shape])`.
    fn unpack(&self, x: &[f64]) -> (f64, f64, f64, f64, f64) {
        let shape = if self.model.shape_free() { x[4].exp() } else { self.shape0 };
        (x[0] * self.s, x[1].exp(), x[2].exp(), x[3], shape)
    }

    fn residual(&self, x: &[f64], zeta: f64) -> Result<Vec<f64>> {
        let (w, v, u, phi, shape) = self.unpack(x);
        let m = self.moments(w, v, u, phi, shape)?;
        let mut r = vec![m[0] - zeta, m[1] - (1.0 - zeta), m[2] - zeta * x[0], m[3]];
        if self.model.shape_free() {
            r.push(m[4]);
        }
        if r.iter().all(|v| v.is_finite()) {
            Ok(r)
        } else {
            Err(Error::NonFinite("RS residual".into()))
        }
    }

    fn initial_guess(&self, zeta: f64) -> Result<Vec<f64>> {
        let theta0 = if self.noise == NoiseFamily::GammaFrailty { self.shape0 } else { 0.0 };
        let info = rules::location_information(self.noise, theta0)?;
        let (k0, _) = self.slope(self.shape0);
        let width = if self.noise == NoiseFamily::GammaFrailty { 1.0 } else { self.shape0 };
        let r = (zeta / info).sqrt() * width / k0;
        let mut x = vec![1.0, r.ln(), r.ln(), self.phi0];
        if self.model.shape_free() {
            x.push(self.shape0.ln());
        }
        Ok(x)
    }

    fn finish(&self, p: &PathPoint, certified: bool) -> RsSolution {
        let (w, v, u, phi, shape) = self.unpack(&p.x);
        let (k, _) = self.slope(shape);
        let frailty = self.noise == NoiseFamily::GammaFrailty;
        let (nuisance_star, rescaled) = if frailty {
            (
                NuisanceStar { phi_shift: phi - self.phi0, sigma_ratio: None, theta: Some(shape) },
                Rescaled { a: u, b: v, c: phi - self.phi0, d: shape },
            )
        } else {
            (
                NuisanceStar {
                    phi_shift: (phi - self.phi0) / self.shape0,
                    sigma_ratio: Some(shape / self.shape0),
                    theta: None,
                },
                Rescaled { a: k * u / shape, b: k * v / shape, c: shape / self.shape0, d: (phi - self.phi0) / shape },
            )
        };
        RsSolution {
            model: RsModel::Generic { noise: self.noise },
            zeta: p.zeta,
            w_over_s: w / self.s,
            v_star: v,
            u_star: u,
            nuisance_star,
            rescaled,
            residual: p.residual,
            converged: certified,
            boundary: false,
            mean_tanh: None,
        }
    }
}

/// Solves the general equations at each zeta for signal strength `s`.
///
/// `w`, `v` and `u` refer to the model's own linear predictor (for the
/// Weibull model, `beta = varphi / sigma`). `rescaled` reports the
/// log-linear quantities used by the specialized reductions.
pub fn sweep_rs_generic(zetas: &[f64], s: f64, model: GenericModel, cfg: &RsConfig) -> Result<Vec<Result<RsSolution>>> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!("signal strength must be positive, got {s}")));
    }
    model.validate()?;
    let sys = GenericSystem::new(cfg, s, model)?;
    let dbl = GenericSystem::new(&cfg.doubled(), s, model)?;
    let guess = |zeta: f64| sys.initial_guess(zeta).unwrap_or_default();
    Ok(certified_sweep(
        &|x: &[f64], z| sys.residual(x, z),
        &|x: &[f64], z| dbl.residual(x, z),
        &guess,
        zetas,
        cfg,
        |p, certified| Ok(sys.finish(p, certified)),
    ))
}

/// Solves the general equations at one zeta.
pub fn solve_rs_generic(zeta: f64, s: f64, model: GenericModel, cfg: &RsConfig) -> Result<RsSolution> {
    sweep_rs_generic(&[zeta], s, model, cfg)?.pop().expect("one target")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rs::solve_rs_weibull;

    #[test]
    fn gaussian_known_scale_closed_form() {
        let cfg = RsConfig::generic_default();
        let model = GenericModel::Gaussian { sigma0: 1.0, known_scale: true };
        for zeta in [0.2, 0.5] {
            let sol = solve_rs_generic(zeta, 1.3, model, &cfg).unwrap();
            assert!((sol.w_over_s - 1.0).abs() < 1e-8, "{sol:?}");
            assert!((sol.v_star.powi(2) - zeta / (1.0 - zeta)).abs() < 1e-8);
            assert!((sol.u_star.powi(2) - zeta / (1.0 - zeta)).abs() < 1e-8);
        }
    }

    #[test]
    fn weibull_matches_reduction() {
        let cfg = RsConfig::generic_default();
        let model = GenericModel::Survival { nuisance0: Nuisance::Weibull { lambda: 1.0 / 3.0, rho: 0.5 } };
        let g = solve_rs_generic(0.3, 0.8, model, &cfg).unwrap();
        let w = solve_rs_weibull(0.3, &RsConfig::default()).unwrap();
        let (rg, rw) = (g.rescaled, w.rescaled);
        for (x, y) in [(rg.a, rw.a), (rg.b, rw.b), (rg.c, rw.c), (rg.d, rw.d), (g.w_over_s, 1.0 / rw.c)] {
            assert!((x - y).abs() < 1e-5, "{g:?} vs {w:?}");
        }
    }
}
