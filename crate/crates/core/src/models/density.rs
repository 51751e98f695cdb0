//! Native-scale densities `p(t | x'beta, nuisance)`.

use super::family::Nuisance;
use crate::error::{Error, Result};
use crate::numerics::softplus;

/// Log-density with its derivatives in the linear predictor and the two
/// nuisance parameters (`(lambda, rho)` or `(lambda, theta)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub value: f64,
    pub d_linpred: f64,
    pub d_nuisance: [f64; 2],
}

fn check(t: f64, nuisance: &Nuisance) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("density requires t > 0, got {t}")));
    }
    nuisance.validate()
}

/// Log-density and gradients.
///
/// * Weibull: `rho lambda^rho t^(rho-1) e^eta exp(-(lambda t)^rho e^eta)`.
/// * Log-logistic: `rho r^(rho-1) e^eta / (lambda (1 + r^rho)^2)` with
///   `r = t e^eta / lambda`.
/// * Frailty: `lambda e^eta (1 + theta lambda t e^eta)^-(1 + 1/theta)`,
///   taken as `lambda e^eta exp(-lambda t e^eta)` at `theta = 0`.
pub fn log_density(t: f64, linpred: f64, nuisance: &Nuisance) -> Result<LogDensity> {
    check(t, nuisance)?;
    Ok(match *nuisance {
        Nuisance::Weibull { lambda, rho } => {
            let log_lt = (lambda * t).ln();
            let h = (rho * log_lt + linpred).exp();
            LogDensity {
                value: rho.ln() + rho * lambda.ln() + (rho - 1.0) * t.ln() + linpred - h,
                d_linpred: 1.0 - h,
                d_nuisance: [rho / lambda * (1.0 - h), 1.0 / rho + log_lt * (1.0 - h)],
            }
        }
        Nuisance::LogLogistic { lambda, rho } => {
            let log_r = t.ln() + linpred - lambda.ln();
            // (1 - r^rho) / (1 + r^rho) = tanh(-rho log r / 2)
            let k = (-0.5 * rho * log_r).tanh();
            LogDensity {
                value: rho.ln() + (rho - 1.0) * log_r + linpred - lambda.ln() - 2.0 * softplus(rho * log_r),
                d_linpred: rho * k,
                d_nuisance: [-rho / lambda * k, 1.0 / rho + log_r * k],
            }
        }
        Nuisance::Frailty { lambda, theta } => {
            let r = -(lambda * t).ln() - linpred;
            let d = super::noise::frailty_log_density(r, theta);
            // log p_T = log p_Z(r) + log(1/t) where dr/d(eta) = -1, dr/d(lambda) = -1/lambda.
            LogDensity {
                value: d.value - t.ln(),
                d_linpred: -d.dr,
                d_nuisance: [-d.dr / lambda, d.dtheta],
            }
        }
    })
}

pub fn density(t: f64, linpred: f64, nuisance: &Nuisance) -> Result<f64> {
    Ok(log_density(t, linpred, nuisance)?.value.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::composite_legendre;
    use proptest::prelude::*;

    #[test]
    fn unit_exponential_examples() {
        let e = (-1.0f64).exp();
        let w = density(1.0, 0.0, &Nuisance::Weibull { lambda: 1.0, rho: 1.0 }).unwrap();
        assert!((w - e).abs() < 1e-15);
        let f = density(1.0, 0.0, &Nuisance::Frailty { lambda: 1.0, theta: 0.0 }).unwrap();
        assert!((f - e).abs() < 1e-15);
        let f_small = density(1.0, 0.0, &Nuisance::Frailty { lambda: 1.0, theta: 1e-9 }).unwrap();
        assert!((f_small - e).abs() < 1e-8);
    }

    #[test]
    fn loglogistic_at_scale_point() {
        for &(lambda, rho, eta) in &[(1.0, 1.0, 0.0f64), (2.5, 0.7, 0.3), (0.4, 3.0, -1.2)] {
            let t = lambda * (-eta).exp();
            let d = density(t, eta, &Nuisance::LogLogistic { lambda, rho }).unwrap();
            assert!((d - rho / (4.0 * t)).abs() < 1e-13 * (1.0 + d));
        }
    }

    #[test]
    fn domain_errors() {
        let n = Nuisance::Weibull { lambda: 1.0, rho: 1.0 };
        assert!(density(0.0, 0.0, &n).is_err());
        assert!(density(1.0, 0.0, &Nuisance::Weibull { lambda: 1.0, rho: -1.0 }).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        // Integrate over log t so heavy tails are covered.
        let (x, w) = composite_legendre(-60.0, 60.0, 32, 32).unwrap();
        let cases = [
            Nuisance::Weibull { lambda: 1.0 / 3.0, rho: 0.5 },
            Nuisance::Weibull { lambda: 2.0, rho: 3.0 },
            Nuisance::LogLogistic { lambda: 1.0, rho: 1.0 },
            Nuisance::LogLogistic { lambda: 0.5, rho: 4.0 },
            Nuisance::Frailty { lambda: 2.0, theta: 0.0 },
            Nuisance::Frailty { lambda: 2.0, theta: 0.5 },
            Nuisance::Frailty { lambda: 0.3, theta: 2.0 },
        ];
        for n in cases {
            for eta in [-0.7, 0.0, 1.1] {
                let mass: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(lt, w)| w * lt.exp() * density(lt.exp(), eta, &n).unwrap())
                    .sum();
                assert!((mass - 1.0).abs() < 1e-6, "{n:?} eta={eta} mass={mass}");
            }
        }
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(
            lt in -3.0f64..3.0, eta in -1.5f64..1.5, lambda in 0.2f64..3.0, shape in 0.2f64..3.0, fam in 0usize..3,
        ) {
            let t = lt.exp();
            let make = |l: f64, s: f64| match fam {
                0 => Nuisance::Weibull { lambda: l, rho: s },
                1 => Nuisance::LogLogistic { lambda: l, rho: s },
                _ => Nuisance::Frailty { lambda: l, theta: s },
            };
            let d = log_density(t, eta, &make(lambda, shape)).unwrap();
            let h = 1e-6;
            let f = |e: f64, l: f64, s: f64| log_density(t, e, &make(l, s)).unwrap().value;
            let g_eta = (f(eta + h, lambda, shape) - f(eta - h, lambda, shape)) / (2.0 * h);
            let g_l = (f(eta, lambda + h, shape) - f(eta, lambda - h, shape)) / (2.0 * h);
            let g_s = (f(eta, lambda, shape + h) - f(eta, lambda, shape - h)) / (2.0 * h);
            prop_assert!((d.d_linpred - g_eta).abs() <= 1e-5 * (1.0 + g_eta.abs()));
            prop_assert!((d.d_nuisance[0] - g_l).abs() <= 1e-5 * (1.0 + g_l.abs()));
            prop_assert!((d.d_nuisance[1] - g_s).abs() <= 1e-5 * (1.0 + g_s.abs()));
        }
    }
}
