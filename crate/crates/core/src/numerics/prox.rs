use crate::error::{Error, Result};

/// Value and first two derivatives of a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Proximal point `argmin_xi 0.5 ((xi - nu) / u)^2 + h(xi)` for a convex,
/// twice differentiable `h` given through its derivatives.
///
/// The objective's derivative is strictly increasing (its curvature is at
/// least `1/u^2`), so the root is bracketed first and then found by Newton
/// steps that fall back to bisection when they leave the bracket.
pub fn prox_minimize<H: Fn(f64) -> Derivs>(nu: f64, u: f64, h: H) -> Result<f64> {
    if !(u > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("prox needs u > 0 and finite nu (u={u}, nu={nu})")));
    }
    let inv_u2 = 1.0 / (u * u);
    let grad = |x: f64| -> (f64, f64) {
        let d = h(x);
        ((x - nu) * inv_u2 + d.d1, inv_u2 + d.d2)
    };

    let (g0, _) = grad(nu);
    if g0 == 0.0 {
        return Ok(nu);
    }
    if g0.is_nan() {
        return Err(Error::NonFinite("prox objective derivative at nu".into()));
    }
    // The root lies on the descent side of nu; double the step until the
    // derivative changes sign (an infinite derivative still has a sign).
    let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = u.max(1e-3);
    let mut inner = nu;
    let mut outer = None;
    for _ in 0..200 {
        let x = nu + dir * step;
        let (g, _) = grad(x);
        if g.is_nan() {
            return Err(Error::NonFinite(format!("prox objective derivative at {x}")));
        }
        if g == 0.0 {
            return Ok(x);
        }
        if g.signum() != g0.signum() {
            outer = Some(x);
            break;
        }
        inner = x;
        step *= 2.0;
    }
    let Some(outer) = outer else {
        return Err(Error::NoConvergence { iterations: 200, residual: g0.abs() });
    };
    let (mut lo, mut hi) = if dir > 0.0 { (inner, outer) } else { (outer, inner) };

    let mut x = if dir > 0.0 { lo } else { hi };
    for it in 0..200 {
        let (g, gp) = grad(x);
        if g == 0.0 {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = if gp.is_finite() { x - g / gp } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let tol = 4.0 * f64::EPSILON * (1.0 + next.abs());
        if (next - x).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        x = next;
        if it == 199 {
            return Err(Error::NoConvergence { iterations: 200, residual: g.abs() });
        }
    }
    Ok(x)
}

/// Golden-section minimizer on `[lo, hi]`; slow but derivative free.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::lambert_w0;
    use proptest::prelude::*;

    fn quadratic(x: f64) -> Derivs {
        Derivs { value: 0.5 * x * x, d1: x, d2: 1.0 }
    }

    // Standard Gumbel negative log-density for the log-linear Weibull noise,
    // written in terms of the residual z = y - xi with y fixed.
    fn gumbel_nld(y: f64) -> impl Fn(f64) -> Derivs {
        move |xi: f64| {
            let z = y - xi;
            let e = (-z).exp();
            Derivs { value: z + e, d1: -1.0 + e, d2: e }
        }
    }

    #[test]
    fn quadratic_shrinkage() {
        let x = prox_minimize(1.3, 1.0, quadratic).unwrap();
        assert!((x - 0.65).abs() < 1e-14);
    }

    #[test]
    fn symmetric_density_at_zero() {
        let logistic = |x: f64| {
            let s = 1.0 / (1.0 + (-x).exp());
            Derivs { value: 0.0, d1: 2.0 * s - 1.0, d2: 2.0 * s * (1.0 - s) }
        };
        for u in [0.1, 1.0, 7.0] {
            assert_eq!(prox_minimize(0.0, u, logistic).unwrap(), 0.0);
        }
    }

    #[test]
    fn gumbel_prox_matches_lambert_form() {
        // With y = 0: stationarity (xi - nu)/u^2 - 1 + exp(xi) = 0, solved by
        // xi = nu + u^2 - W(u^2 exp(nu + u^2)).
        let (nu, u) = (0.7_f64, 0.5_f64);
        let u2 = u * u;
        let closed = nu + u2 - lambert_w0(u2 * (nu + u2).exp()).unwrap();
        let x = prox_minimize(nu, u, gumbel_nld(0.0)).unwrap();
        let h = |xi: f64| 0.5 * ((xi - nu) / u).powi(2) + gumbel_nld(0.0)(xi).value;
        let oracle = golden_section(h, -5.0, 5.0, 1e-12);
        assert!((x - closed).abs() < 1e-12);
        assert!((x - oracle).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn gaussian_matches_shrinkage(nu in -20.0f64..20.0, u in 0.01f64..10.0, s in 0.1f64..5.0) {
            let h = move |x: f64| Derivs { value: 0.5 * x * x / (s * s), d1: x / (s * s), d2: 1.0 / (s * s) };
            let x = prox_minimize(nu, u, h).unwrap();
            let exact = nu * s * s / (s * s + u * u);
            prop_assert!((x - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        }

        #[test]
        fn first_order_residual(nu in -30.0f64..30.0, u in 0.05f64..20.0, y in -5.0f64..5.0) {
            let h = gumbel_nld(y);
            let x = prox_minimize(nu, u, &h).unwrap();
            let r = (x - nu) / (u * u) + h(x).d1;
            prop_assert!(r.abs() * u * u <= 1e-10 * (1.0 + x.abs() + nu.abs()));
        }
    }
}
