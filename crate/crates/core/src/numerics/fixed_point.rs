use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Settings for [`damped_fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub max_iter: usize,
    /// Sup-norm tolerance on `x - map(x)`.
    pub tol: f64,
    /// Number of intermediate points used when continuing a solution along
    /// a parameter path (0 lets the caller choose).
    pub continuation_steps: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { damping: 0.5, max_iter: 10_000, tol: 1e-8, continuation_steps: 0 }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidInput("tol must be positive and max_iter at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Iterates `x <- (1 - damping) x + damping map(x)` until
/// `||x - map(x)||_inf <= tol`.
pub fn damped_fixed_point<M>(mut map: M, x0: &[f64], cfg: &FixedPointConfig) -> Result<FixedPointOutcome>
where
    M: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fixed-point start".into()));
    }
    let mut x = x0.to_vec();
    let mut residual = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let mx = map(&x)?;
        if mx.len() != x.len() {
            return Err(Error::InvalidInput("fixed-point map changed dimension".into()));
        }
        if mx.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("fixed-point map output at iteration {it}")));
        }
        residual = sup_diff(&x, &mx);
        if residual <= cfg.tol {
            return Ok(FixedPointOutcome { x, iterations: it, residual });
        }
        for (xi, mi) in x.iter_mut().zip(&mx) {
            *xi = (1.0 - cfg.damping) * *xi + cfg.damping * mi;
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual })
}

/// One Newton step for `residual(x) = 0` with a forward-difference Jacobian,
/// shaped as a map `x -> x - J^{-1} r(x)` so that its fixed points are the
/// zeros of `residual`. Steps are capped at `max_step` in sup norm.
pub fn newton_map<R>(residual: &R, x: &[f64], max_step: f64) -> Result<Vec<f64>>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let r0 = residual(x)?;
    if r0.len() != n {
        return Err(Error::InvalidInput("residual dimension differs from unknowns".into()));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let rj = residual(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (rj[i] - r0[i]) / h;
        }
    }
    let rhs = DVector::from_column_slice(&r0);
    let step = jac
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NonFinite("singular Jacobian in Newton map".into()))?;
    let norm = step.amax();
    let scale = if norm > max_step { max_step / norm } else { 1.0 };
    Ok(x.iter().zip(step.iter()).map(|(xi, si)| xi - scale * si).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_fixed_immediately() {
        let x0 = [1.5, -2.0, 3.0];
        let out = damped_fixed_point(|x: &[f64]| Ok(x.to_vec()), &x0, &FixedPointConfig::default()).unwrap();
        assert_eq!(out.x, x0.to_vec());
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn linear_contraction() {
        let cfg = FixedPointConfig { tol: 1e-10, ..Default::default() };
        let out = damped_fixed_point(|x: &[f64]| Ok(vec![0.5 * x[0]]), &[1.0], &cfg).unwrap();
        assert!(out.x[0].abs() <= 2e-10);
    }

    #[test]
    fn reports_non_convergence_and_nan() {
        let cfg = FixedPointConfig { max_iter: 5, ..Default::default() };
        let err = damped_fixed_point(|x: &[f64]| Ok(vec![x[0] + 1.0]), &[0.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 5, .. }));
        let err = damped_fixed_point(|_: &[f64]| Ok(vec![f64::NAN]), &[0.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert!(damped_fixed_point(|x: &[f64]| Ok(x.to_vec()), &[0.0], &FixedPointConfig { damping: 0.0, ..cfg }).is_err());
    }

    #[test]
    fn newton_map_solves_nonlinear_system() {
        // x^2 + y^2 = 4, x = y  ->  x = y = sqrt(2)
        let res = |v: &[f64]| Ok(vec![v[0] * v[0] + v[1] * v[1] - 4.0, v[0] - v[1]]);
        let cfg = FixedPointConfig { damping: 1.0, tol: 1e-12, ..Default::default() };
        let out = damped_fixed_point(|x: &[f64]| newton_map(&res, x, 1.0), &[1.0, 2.0], &cfg).unwrap();
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-10 && (out.x[1] - 2f64.sqrt()).abs() < 1e-10);
    }
}
