use crate::error::{Error, Result};

/// Unique root of `x = a - b tanh(x)` for `b >= 0`.
///
/// `g(x) = x + b tanh(x) - a` is strictly increasing and changes sign on
/// `[a - b, a + b]`, so Newton steps are kept inside a shrinking bracket and
/// replaced by bisection whenever they would leave it.
pub fn solve_a_minus_b_tanh(a: f64, b: f64) -> f64 {
    debug_assert!(b >= 0.0 && a.is_finite());
    if b == 0.0 {
        return a;
    }
    let mut lo = a - b;
    let mut hi = a + b;
    let mut x = (a / (1.0 + b)).clamp(lo, hi);
    for _ in 0..200 {
        let t = x.tanh();
        let g = x + b * t - a;
        if g == 0.0 {
            return x;
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // 1 - tanh^2 without cancellation for large |x|.
        let sech2 = {
            let e = (-2.0 * x.abs()).exp();
            4.0 * e / ((1.0 + e) * (1.0 + e))
        };
        let mut next = x - g / (1.0 + b * sech2);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * (1.0 + x.abs()) || hi - lo <= 2.0 * f64::EPSILON * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Root of a continuous function on `[lo, hi]` with a sign change, by
/// bisection down to `tol` in `x`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::OutOfRange(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
