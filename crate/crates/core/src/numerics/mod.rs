//! Special functions, quadrature rules, scalar solvers and the damped
//! fixed-point driver shared by the solvers and fitters.

mod fixed_point;
mod interp;
mod lambert;
mod prox;
mod quadrature;
mod roots;

pub use fixed_point::{damped_fixed_point, newton_map, FixedPointConfig, FixedPointOutcome};
pub use interp::Pchip;
pub use lambert::{lambert_w0, lambert_w0_exp};
pub use prox::{golden_section, prox_minimize, Derivs};
pub use quadrature::{composite_legendre, gauss_rule, QuadratureKind, QuadratureRule, MAX_ORDER};
pub use roots::{bisect, solve_a_minus_b_tanh};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid `1 / (1 + exp(-x))`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
