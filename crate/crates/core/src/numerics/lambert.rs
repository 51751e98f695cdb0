use crate::error::{Error, Result};
use std::f64::consts::E;

const INV_E: f64 = 1.0 / E;

/// Principal branch of the Lambert W function: the `w >= -1` solving
/// `w * exp(w) = x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("lambert_w0 of NaN".into()));
    }
    if x < -INV_E {
        // Allow rounding noise right at the branch point.
        if x > -INV_E - 4.0 * f64::EPSILON {
            return Ok(-1.0);
        }
        return Err(Error::Domain(format!("lambert_w0 requires x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x > 1e300 {
        return Ok(lambert_w0_exp(x.ln()));
    }
    Ok(halley(x, initial_guess(x)))
}

/// `W(exp(log_x))` without forming `exp(log_x)`, usable when the argument
/// would overflow or underflow.
pub fn lambert_w0_exp(log_x: f64) -> f64 {
    if log_x < 2.0 {
        return halley(log_x.exp(), initial_guess(log_x.exp()));
    }
    // Solve w + ln(w) = log_x by Newton; the map is increasing and concave.
    let mut w = log_x - log_x.ln();
    for _ in 0..50 {
        let f = w + w.ln() - log_x;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            break;
        }
    }
    w
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series about the branch point.
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 2.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    w.max(-1.0)
}
