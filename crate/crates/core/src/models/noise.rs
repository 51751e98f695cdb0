//! Log-densities of the log-linear noise laws and their derivatives.

use super::family::NoiseFamily;
use crate::numerics::{softplus, sigmoid, Derivs, EULER_GAMMA};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Standardized log-density `l0(e)` of a location-scale noise family with
/// its first two derivatives. Panics for the frailty family, which is not
/// location-scale.
pub fn std_log_density(family: NoiseFamily, e: f64) -> Derivs {
    match family {
        NoiseFamily::Gumbel => {
            let ex = (-e).exp();
            Derivs { value: -e - ex, d1: -1.0 + ex, d2: -ex }
        }
        NoiseFamily::Logistic => {
            // l0 = -e - 2 log(1 + exp(-e)), l0' = 1 - 2 sigmoid(e).
            let s = sigmoid(e);
            Derivs { value: -e - 2.0 * softplus(-e), d1: 1.0 - 2.0 * s, d2: -2.0 * s * (1.0 - s) }
        }
        NoiseFamily::Gaussian => Derivs { value: -0.5 * e * e - HALF_LN_2PI, d1: -e, d2: -1.0 },
        NoiseFamily::GammaFrailty => panic!("frailty noise is not a location-scale family"),
    }
}

/// Mean and variance of the standardized noise of a location-scale family.
pub fn std_moments(family: NoiseFamily) -> (f64, f64) {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    match family {
        NoiseFamily::Gumbel => (EULER_GAMMA, pi2 / 6.0),
        NoiseFamily::Logistic => (0.0, pi2 / 3.0),
        NoiseFamily::Gaussian => (0.0, 1.0),
        NoiseFamily::GammaFrailty => panic!("frailty noise is not a location-scale family"),
    }
}

/// Derivatives of the frailty log-density in the residual `r = z - phi`
/// and the variance `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrailtyDerivs {
    pub value: f64,
    pub dr: f64,
    pub drr: f64,
    pub dtheta: f64,
    pub drtheta: f64,
    pub dthetatheta: f64,
}

/// `L(x) = log(1 + x) / x` and its first two derivatives, with series
/// expansions near zero where the closed forms cancel.
fn log1p_ratio(x: f64) -> (f64, f64, f64) {
    if x.abs() < 1e-3 {
        let l = 1.0 - x / 2.0 + x * x / 3.0 - x.powi(3) / 4.0 + x.powi(4) / 5.0 - x.powi(5) / 6.0;
        let l1 = -0.5 + 2.0 * x / 3.0 - 0.75 * x * x + 0.8 * x.powi(3) - 5.0 / 6.0 * x.powi(4);
        let l2 = 2.0 / 3.0 - 1.5 * x + 2.4 * x * x - 10.0 / 3.0 * x.powi(3);
        return (l, l1, l2);
    }
    let lp = x.ln_1p();
    let n = x / (1.0 + x) - lp;
    let l = lp / x;
    let l1 = n / (x * x);
    let l2 = -1.0 / (x * (1.0 + x) * (1.0 + x)) - 2.0 * n / (x * x * x);
    (l, l1, l2)
}

/// Frailty log-density of the residual `r`:
/// `l(r, theta) = -r - (1 + 1/theta) log(1 + theta exp(-r))`, continuous
/// at `theta = 0` where it becomes `-r - exp(-r)`.
pub fn frailty_log_density(r: f64, theta: f64) -> FrailtyDerivs {
    let s = (-r).exp();
    let x = theta * s;
    let (l, l1, l2) = log1p_ratio(x);
    // log(1 + theta s) / theta = s L(theta s)
    let value = -r - (1.0 + theta) * s * l;
    let q = s / (1.0 + x);
    let dr = -1.0 + (1.0 + theta) * q;
    let drr = -(1.0 + theta) * q / (1.0 + x);
    let dtheta = -(q + s * s * l1);
    let drtheta = s * (1.0 - s) / ((1.0 + x) * (1.0 + x));
    let dthetatheta = s * s / ((1.0 + x) * (1.0 + x)) - s * s * s * l2;
    FrailtyDerivs { value, dr, drr, dtheta, drtheta, dthetatheta }
}
