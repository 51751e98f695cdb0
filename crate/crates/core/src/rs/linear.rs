//! Linear models `y = x'beta + z` with an arbitrary noise law `p_z`.
//!
//! The overlap equals the signal strength exactly, which removes it from
//! the equations. With the true noise `e0`, `Q ~ N(0, 1)` and
//! `eta = argmin 0.5((eta - vQ)/u)^2 - log p_z(e0 - eta)`, the unknowns
//! `(v, u)` and the noise parameters solve
//!
//! ```text
//! E[(eta - vQ)^2]                         = zeta v^2
//! E[1 / (1 - u^2 (log p_z)''(e0 - eta))]  = 1 - zeta
//! E[grad_(location, shape) log p_z(e0 - eta)] = 0
//! ```
//!
//! Location-scale noise is solved for `sigma0 = 1`, `phi0 = 0` and
//! rescaled afterwards; frailty noise keeps unit scale and estimates the
//! variance.

use super::path::{certified_sweep, PathPoint};
use super::rules::{self, Rule};
use super::{NuisanceStar, Rescaled, RsConfig, RsModel, RsSolution};
use crate::error::{Error, Result};
use crate::models::noise::{frailty_log_density, std_log_density};
use crate::models::NoiseFamily;
use crate::numerics::{prox_minimize, Derivs};

/// Noise log-density of a residual and its derivatives in the residual and
/// the two noise parameters `(location, shape)`.
pub(crate) struct NoiseTerms {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d_location: f64,
    pub d_shape: f64,
}

/// `log p_z(z | location, shape)` where `shape` is the scale for
/// location-scale noise and the variance for frailty noise.
pub(crate) fn noise_terms(noise: NoiseFamily, z: f64, location: f64, shape: f64) -> NoiseTerms {
    match noise {
        NoiseFamily::GammaFrailty => {
            let d = frailty_log_density(z - location, shape);
            NoiseTerms { value: d.value, d1: d.dr, d2: d.drr, d_location: -d.dr, d_shape: d.dtheta }
        }
        ls => {
            let r = (z - location) / shape;
            let d = std_log_density(ls, r);
            NoiseTerms {
                value: d.value - shape.ln(),
                d1: d.d1 / shape,
                d2: d.d2 / (shape * shape),
                d_location: -d.d1 / shape,
                d_shape: -(r * d.d1 + 1.0) / shape,
            }
        }
    }
}

pub(crate) struct LinearSystem {
    noise: NoiseFamily,
    q: Rule,
    e: Rule,
}

impl LinearSystem {
    pub fn new(cfg: &RsConfig, noise: NoiseFamily, theta0: f64) -> Result<Self> {
        Ok(Self { noise, q: cfg.gaussian_rule()?, e: cfg.noise_rule(noise, theta0)? })
    }

    /// `[E(eta - vQ)^2 / v^2, E 1/(1 + u^2 h''), E d_location, E d_shape]`.
    pub fn moments(&self, v: f64, u: f64, location: f64, shape: f64) -> Result<[f64; 4]> {
        let noise = self.noise;
        let failed = std::sync::atomic::AtomicBool::new(false);
        let m = self.q.par_mean(|q| {
            self.e.mean_array(|e0| {
                let h = |eta: f64| {
                    let t = noise_terms(noise, e0 - eta, location, shape);
                    Derivs { value: -t.value, d1: t.d1, d2: -t.d2 }
                };
                match prox_minimize(v * q, u, h) {
                    Ok(eta) => {
                        let t = noise_terms(noise, e0 - eta, location, shape);
                        let dev = (eta - v * q) / v;
                        [dev * dev, 1.0 / (1.0 - u * u * t.d2), t.d_location, t.d_shape]
                    }
                    Err(_) => {
                        failed.store(true, std::sync::atomic::Ordering::Relaxed);
                        [0.0; 4]
                    }
                }
            })
        });
        if failed.into_inner() {
            return Err(Error::NonFinite("prox evaluation in linear RS equations".into()));
        }
        Ok(m)
    }

    /// Residuals in coordinates `(ln v, ln u, location, ln shape)`.
    pub fn residual(&self, x: &[f64], zeta: f64) -> Result<Vec<f64>> {
        let (v, u, location, shape) = (x[0].exp(), x[1].exp(), x[2], x[3].exp());
        let m = self.moments(v, u, location, shape)?;
        let r = vec![m[0] - zeta, m[1] - (1.0 - zeta), m[2], m[3]];
        if r.iter().all(|v| v.is_finite()) {
            Ok(r)
        } else {
            Err(Error::NonFinite("linear RS residual".into()))
        }
    }
}

/// Solves the linear-model equations at each zeta. `shape0` is the noise
/// scale `sigma0` for location-scale noise and the variance `theta0` for
/// frailty noise.
pub fn sweep_rs_linear(zetas: &[f64], noise: NoiseFamily, shape0: f64, cfg: &RsConfig) -> Result<Vec<Result<RsSolution>>> {
    if !(shape0.is_finite() && shape0 > 0.0) {
        return Err(Error::Domain(format!("noise shape must be positive, got {shape0}")));
    }
    let frailty = noise == NoiseFamily::GammaFrailty;
    let theta0 = if frailty { shape0 } else { 0.0 };
    let sigma0 = if frailty { 1.0 } else { shape0 };
    let sys = LinearSystem::new(cfg, noise, theta0)?;
    let dbl = LinearSystem::new(&cfg.doubled(), noise, theta0)?;
    let info = rules::location_information(noise, theta0)?;
    let guess = |zeta: f64| {
        let r = (zeta / info).sqrt();
        vec![r.ln(), r.ln(), 0.0, if frailty { theta0.ln() } else { 0.0 }]
    };
    let finish = |p: &PathPoint, certified: bool| -> Result<RsSolution> {
        let (v, u, location, shape) = (p.x[0].exp(), p.x[1].exp(), p.x[2], p.x[3].exp());
        let (nuisance_star, rescaled) = if frailty {
            (
                NuisanceStar { phi_shift: location, sigma_ratio: None, theta: Some(shape) },
                Rescaled { a: u, b: v, c: location, d: shape },
            )
        } else {
            (
                NuisanceStar { phi_shift: location, sigma_ratio: Some(shape), theta: None },
                Rescaled { a: u / shape, b: v / shape, c: shape, d: location / shape },
            )
        };
        Ok(RsSolution {
            model: RsModel::Linear { noise },
            zeta: p.zeta,
            w_over_s: 1.0,
            v_star: v * sigma0,
            u_star: u * sigma0,
            nuisance_star,
            rescaled,
            residual: p.residual,
            converged: certified,
            boundary: false,
            mean_tanh: None,
        })
    };
    Ok(certified_sweep(
        &|x: &[f64], z| sys.residual(x, z),
        &|x: &[f64], z| dbl.residual(x, z),
        &guess,
        zetas,
        cfg,
        finish,
    ))
}

/// Solves the linear-model equations at one zeta.
pub fn solve_rs_linear(zeta: f64, noise: NoiseFamily, shape0: f64, cfg: &RsConfig) -> Result<RsSolution> {
    sweep_rs_linear(&[zeta], noise, shape0, cfg)?.pop().expect("one target")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rs::{sweep_rs_loglogistic, sweep_rs_weibull};

    #[test]
    fn gaussian_noise_closed_form() {
        let cfg = RsConfig { gaussian: crate::rs::GaussianRule::Panels { panels: 6, order: 16 }, ..RsConfig::default() };
        let sigma0: f64 = 1.7;
        for zeta in [0.1, 0.4, 0.7] {
            let sol = solve_rs_linear(zeta, NoiseFamily::Gaussian, sigma0, &cfg).unwrap();
            let s2 = sigma0 * sigma0;
            assert_eq!(sol.w_over_s, 1.0);
            assert!((sol.v_star.powi(2) - zeta * s2 / (1.0 - zeta)).abs() < 1e-8, "{sol:?}");
            assert!((sol.u_star.powi(2) - zeta * s2).abs() < 1e-8);
            assert!((sol.f().powi(2) - (1.0 - zeta)).abs() < 1e-8);
            assert!(sol.g().abs() < 1e-9);
        }
    }

    #[test]
    fn agrees_with_weibull_and_loglogistic_reductions() {
        // The specialized systems use closed forms (Euler's constant for the
        // Gumbel mean, Gaussian integration by parts) where the linear route
        // averages over nodes, so both rules must resolve their integrands.
        let cfg = RsConfig { gaussian: crate::rs::GaussianRule::Panels { panels: 6, order: 16 }, ..RsConfig::default() };
        let zetas: Vec<f64> = (1..=10).map(|k| 0.07 * k as f64).collect();
        for (noise, special) in [
            (NoiseFamily::Gumbel, sweep_rs_weibull(&zetas, &cfg).unwrap()),
            (NoiseFamily::Logistic, sweep_rs_loglogistic(&zetas, &cfg).unwrap()),
        ] {
            let lin = sweep_rs_linear(&zetas, noise, 1.0, &cfg).unwrap();
            for (l, s) in lin.into_iter().zip(special) {
                let (l, s) = (l.unwrap(), s.unwrap());
                let (rl, rs) = (l.rescaled, s.rescaled);
                for (x, y) in [(rl.a, rs.a), (rl.b, rs.b), (rl.c, rs.c), (rl.d, rs.d)] {
                    assert!((x - y).abs() < 1e-7, "{noise:?} zeta {}: {rl:?} vs {rs:?}", l.zeta);
                }
            }
        }
    }
}
