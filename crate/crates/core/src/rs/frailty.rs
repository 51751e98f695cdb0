//! Gamma-frailty model (`phi - log s` linear predictor) in rescaled
//! variables.
//!
//! With `w = log s` drawn from the true frailty law, `Q ~ N(0, 1)` and `x`
//! the root of `x = A - B tanh x` where
//!
//! ```text
//! A = (b Q + c + log theta + w)/2 + (a^2/4)(1 - 1/theta)
//! B = (a^2/4)(1 + 1/theta)
//! ```
//!
//! the unknowns `(a, b, c, theta) = (u, v, phi - phi0, theta)` solve
//!
//! ```text
//! E[((a^2/2)((1 - tanh x) - (1 + tanh x)/theta))^2]       = zeta b^2
//! E[a^2 (theta+1) / (a^2 (theta+1) + 4 theta cosh^2 x)]    = zeta
//! E[2x - w] - log theta                                    = c
//! E[log(1 + e^{2x})]                                       = theta
//! ```
//!
//! At `theta = 0` the model degenerates to exponential noise and the
//! equations for `(a, b, c)` become
//! `W = W0(a^2 exp(a^2 + c + bQ + w))`, `E[(a^2 - W)^2] = zeta b^2`,
//! `E[W/(1+W)] = zeta`, `E[W] = a^2`. The boundary is optimal when the
//! frailty-variance score `E[(W/a^2)^2/2 - W/a^2]` is not positive there.

use super::path::{certified_sweep, PathPoint};
use super::rules::Rule;
use super::{NuisanceStar, Rescaled, RsConfig, RsModel, RsSolution};
use crate::error::{Error, Result};
use crate::models::NoiseFamily;
use crate::numerics::{lambert_w0_exp, sigmoid, softplus, solve_a_minus_b_tanh};

/// Interior solutions with a frailty variance below this are reported on
/// the boundary.
const THETA_FLOOR: f64 = 1e-8;

pub(crate) struct FrailtySystem {
    q: Rule,
    w: Rule,
}

impl FrailtySystem {
    pub fn new(cfg: &RsConfig, theta0: f64) -> Result<Self> {
        let mut w = cfg.noise_rule(NoiseFamily::GammaFrailty, theta0)?;
        // The rule is built for e = -log s.
        for n in w.nodes.iter_mut() {
            *n = -*n;
        }
        Ok(Self { q: cfg.gaussian_rule()?, w })
    }

    /// `[E r1-integrand, E curvature, E (2x - w), E softplus(2x), E tanh]`.
    pub fn interior_moments(&self, a: f64, b: f64, c: f64, theta: f64) -> [f64; 5] {
        let a2 = a * a;
        let lt = theta.ln();
        let shift = 0.5 * (c + lt) + 0.25 * a2 * (1.0 - 1.0 / theta);
        let big_b = 0.25 * a2 * (1.0 + 1.0 / theta);
        self.q.par_mean(|q| {
            self.w.mean_array(|w| {
                let x = solve_a_minus_b_tanh(0.5 * (b * q + w) + shift, big_b);
                let one_minus = 2.0 * sigmoid(-2.0 * x);
                let one_plus = 2.0 * sigmoid(2.0 * x);
                let g = 0.5 * a2 * (one_minus - one_plus / theta);
                let ch = x.abs().cosh();
                let k = a2 * (theta + 1.0);
                let curv = if ch.is_finite() { k / (k + 4.0 * theta * ch * ch) } else { 0.0 };
                [g * g, curv, 2.0 * x - w, softplus(2.0 * x), x.tanh()]
            })
        })
    }

    /// Residuals in coordinates `(ln a, ln b, c, ln theta)`.
    pub fn interior_residual(&self, x: &[f64], zeta: f64) -> Result<Vec<f64>> {
        let (a, b, c, theta) = (x[0].exp(), x[1].exp(), x[2], x[3].exp());
        let m = self.interior_moments(a, b, c, theta);
        let r = vec![m[0] - zeta * b * b, m[1] - zeta, m[2] - theta.ln() - c, m[3] - theta];
        finite(r)
    }

    /// `[E(a^2 - W)^2, E W/(1+W), E W, E theta-score]` at `theta = 0`.
    pub fn boundary_moments(&self, a: f64, b: f64, c: f64) -> [f64; 4] {
        let a2 = a * a;
        let base = 2.0 * a.ln() + a2 + c;
        self.q.par_mean(|q| {
            self.w.mean_array(|w| {
                let big_w = lambert_w0_exp(base + b * q + w);
                let s = big_w / a2;
                [(a2 - big_w) * (a2 - big_w), big_w / (1.0 + big_w), big_w, 0.5 * s * s - s]
            })
        })
    }

    /// Residuals in coordinates `(ln a, ln b, c)`.
    pub fn boundary_residual(&self, x: &[f64], zeta: f64) -> Result<Vec<f64>> {
        let (a, b, c) = (x[0].exp(), x[1].exp(), x[2]);
        let m = self.boundary_moments(a, b, c);
        finite(vec![m[0] - zeta * b * b, m[1] - zeta, m[2] - a * a])
    }
}

fn finite(r: Vec<f64>) -> Result<Vec<f64>> {
    if r.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(Error::NonFinite("frailty RS residual".into()))
    }
}

fn check_theta0(theta0: f64) -> Result<()> {
    if theta0.is_finite() && theta0 >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("frailty variance must be non-negative, got {theta0}")))
    }
}

/// Solves the `theta = 0` equations at each zeta and returns the
/// solutions with the frailty-variance score evaluated there.
fn boundary_sweep(zetas: &[f64], theta0: f64, cfg: &RsConfig) -> Result<Vec<Result<(RsSolution, f64)>>> {
    let sys = FrailtySystem::new(cfg, theta0)?;
    let dbl = FrailtySystem::new(&cfg.doubled(), theta0)?;
    let guess = |zeta: f64| {
        let r = zeta.sqrt();
        vec![r.ln(), r.ln(), 0.0]
    };
    let finish = |p: &PathPoint, certified: bool| -> Result<(RsSolution, f64)> {
        let (a, b, c) = (p.x[0].exp(), p.x[1].exp(), p.x[2]);
        let score = sys.boundary_moments(a, b, c)[3];
        let sol = RsSolution {
            model: RsModel::Frailty { theta0 },
            zeta: p.zeta,
            w_over_s: 1.0,
            v_star: b,
            u_star: a,
            nuisance_star: NuisanceStar { phi_shift: c, sigma_ratio: None, theta: Some(0.0) },
            rescaled: Rescaled { a, b, c, d: 0.0 },
            residual: p.residual,
            converged: certified,
            boundary: true,
            mean_tanh: None,
        };
        Ok((sol, score))
    };
    Ok(certified_sweep(
        &|x: &[f64], z| sys.boundary_residual(x, z),
        &|x: &[f64], z| dbl.boundary_residual(x, z),
        &guess,
        zetas,
        cfg,
        finish,
    ))
}

/// Frailty-variance score of the likelihood limit at `theta = 0`. A
/// non-positive value means the limiting estimate of the variance is zero.
pub fn frailty_theta_score_at_boundary(zeta: f64, theta0: f64, cfg: &RsConfig) -> Result<f64> {
    check_theta0(theta0)?;
    boundary_sweep(&[zeta], theta0, cfg)?.pop().expect("one target").map(|(_, s)| s)
}

/// Solves the frailty system at each requested zeta. Points where the
/// frailty variance is pinned at zero are returned with `boundary = true`.
pub fn sweep_rs_frailty(zetas: &[f64], theta0: f64, cfg: &RsConfig) -> Result<Vec<Result<RsSolution>>> {
    check_theta0(theta0)?;
    let boundary = boundary_sweep(zetas, theta0, cfg)?;
    let interior_idx: Vec<usize> = boundary
        .iter()
        .enumerate()
        .filter(|(_, b)| !matches!(b, Ok((_, score)) if *score <= 0.0))
        .map(|(i, _)| i)
        .collect();
    let interior_targets: Vec<f64> = interior_idx.iter().map(|&i| zetas[i]).collect();

    let sys = FrailtySystem::new(cfg, theta0)?;
    let dbl = FrailtySystem::new(&cfg.doubled(), theta0)?;
    let info = 1.0 / (1.0 + 2.0 * theta0);
    let guess = |zeta: f64| {
        let r = (zeta / info).sqrt();
        vec![r.ln(), r.ln(), 0.0, theta0.max(THETA_FLOOR).ln()]
    };
    let finish = |p: &PathPoint, certified: bool| -> Result<RsSolution> {
        let (a, b, c, theta) = (p.x[0].exp(), p.x[1].exp(), p.x[2], p.x[3].exp());
        let mean_tanh = sys.interior_moments(a, b, c, theta)[4];
        Ok(RsSolution {
            model: RsModel::Frailty { theta0 },
            zeta: p.zeta,
            w_over_s: 1.0,
            v_star: b,
            u_star: a,
            nuisance_star: NuisanceStar { phi_shift: c, sigma_ratio: None, theta: Some(theta) },
            rescaled: Rescaled { a, b, c, d: theta },
            residual: p.residual,
            converged: certified,
            boundary: false,
            mean_tanh: Some(mean_tanh),
        })
    };
    let interior = if interior_targets.is_empty() {
        Vec::new()
    } else {
        certified_sweep(
            &|x: &[f64], z| sys.interior_residual(x, z),
            &|x: &[f64], z| dbl.interior_residual(x, z),
            &guess,
            &interior_targets,
            cfg,
            finish,
        )
    };

    let mut out: Vec<Option<Result<RsSolution>>> = boundary
        .into_iter()
        .map(|b| match b {
            Ok((sol, score)) if score <= 0.0 => Some(Ok(sol)),
            _ => None,
        })
        .collect();
    for (&i, sol) in interior_idx.iter().zip(interior) {
        out[i] = Some(match sol {
            Ok(s) if s.nuisance_star.theta.unwrap_or(0.0) < THETA_FLOOR => {
                boundary_sweep(&[s.zeta], theta0, cfg)?.pop().expect("one target").map(|(b, _)| b)
            }
            other => other,
        });
    }
    Ok(out.into_iter().map(|o| o.expect("every target assigned")).collect())
}

/// Solves the frailty system at one zeta.
pub fn solve_rs_frailty(zeta: f64, theta0: f64, cfg: &RsConfig) -> Result<RsSolution> {
    sweep_rs_frailty(&[zeta], theta0, cfg)?.pop().expect("one target")
}

#[cfg(test)]
mod tests {
    use super::*;

    // theta0 = 0.5, values (a, b, c, theta) from an independent solver of
    // the same equations.
    const REFERENCE: [(f64, [f64; 4]); 5] = [
        (0.05, [0.31799113, 0.32624498, -0.02166001, 0.45270287]),
        (0.1, [0.45166816, 0.47735177, -0.04753277, 0.39974044]),
        (0.15, [0.55444667, 0.60726962, -0.07987904, 0.33848533]),
        (0.2, [0.63909586, 0.7329648, -0.12394706, 0.26307646]),
        (0.25, [0.7056083, 0.86833755, -0.19785933, 0.15408796]),
    ];

    #[test]
    fn matches_reference_values_and_identity() {
        let cfg = RsConfig::default();
        let zetas: Vec<f64> = REFERENCE.iter().map(|r| r.0).collect();
        let sols = sweep_rs_frailty(&zetas, 0.5, &cfg).unwrap();
        for ((zeta, expected), sol) in REFERENCE.iter().zip(sols) {
            let sol = sol.unwrap();
            assert!(sol.converged && !sol.boundary, "zeta {zeta}");
            let r = sol.rescaled;
            let got = [r.a, r.b, r.c, r.d];
            for (g, e) in got.iter().zip(expected) {
                assert!((g - e).abs() <= 1e-6, "zeta {zeta}: {got:?} vs {expected:?}");
            }
            let theta = r.d;
            assert!((sol.mean_tanh.unwrap() - (theta - 1.0) / (theta + 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn variance_hits_zero_beyond_critical_zeta() {
        let cfg = RsConfig::default();
        let sols = sweep_rs_frailty(&[0.1, 0.3, 0.4], 0.5, &cfg).unwrap();
        let s: Vec<RsSolution> = sols.into_iter().map(|s| s.unwrap()).collect();
        assert!(!s[0].boundary);
        assert!(s[1].boundary && s[2].boundary);
        assert_eq!(s[1].nuisance_star.theta, Some(0.0));
        assert!(frailty_theta_score_at_boundary(0.3, 0.5, &cfg).unwrap() <= 0.0);
        assert!(frailty_theta_score_at_boundary(0.1, 0.5, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn small_zeta_limit() {
        let sol = solve_rs_frailty(1e-3, 0.5, &RsConfig::default()).unwrap();
        assert!((sol.nuisance_star.theta.unwrap() - 0.5).abs() < 1e-2);
        assert!(sol.g().abs() < 1e-2);
    }

    #[test]
    fn rejects_negative_variance() {
        assert!(solve_rs_frailty(0.1, -0.1, &RsConfig::default()).is_err());
    }
}
