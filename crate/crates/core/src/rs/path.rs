//! Newton-preconditioned fixed-point solves and continuation in zeta.

use super::RsConfig;
use crate::error::{Error, Result};
use crate::numerics::{damped_fixed_point, newton_map};

/// A converged point on a solution path.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PathPoint {
    pub zeta: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Solves `residual(x, zeta) = 0` from `guess` by iterating the Newton map
/// `x -> x - J(x)^{-1} r(x)` through the damped fixed-point driver, then
/// takes one polishing step.
pub(crate) fn solve_at<R>(residual: &R, zeta: f64, guess: &[f64], cfg: &RsConfig) -> Result<PathPoint>
where
    R: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    let r = |x: &[f64]| residual(x, zeta);
    let out = damped_fixed_point(|x: &[f64]| newton_map(&r, x, cfg.max_newton_step), guess, &cfg.fixed_point)?;
    let polished = newton_map(&r, &out.x, cfg.max_newton_step)?;
    let res_polished = sup(&r(&polished)?);
    let res_plain = sup(&r(&out.x)?);
    let (x, res) = if res_polished <= res_plain { (polished, res_polished) } else { (out.x, res_plain) };
    if !res.is_finite() || res > cfg.residual_tol {
        return Err(Error::NoConvergence { iterations: out.iterations, residual: res });
    }
    Ok(PathPoint { zeta, x, residual: res, iterations: out.iterations })
}

/// Follows the solution from `cfg.path_start` up to each requested zeta
/// (sorted increasingly), warm-starting every step from a linear
/// extrapolation of the last two points and halving the step on failure.
/// Targets at or below the path start are solved from `initial_guess`.
pub(crate) fn sweep<R, G>(residual: &R, initial_guess: &G, targets: &[f64], cfg: &RsConfig) -> Vec<Result<PathPoint>>
where
    R: Fn(&[f64], f64) -> Result<Vec<f64>>,
    G: Fn(f64) -> Vec<f64>,
{
    let mut out = Vec::with_capacity(targets.len());
    let mut history: Vec<PathPoint> = Vec::new();
    for &target in targets {
        out.push(advance(residual, initial_guess, target, cfg, &mut history));
    }
    out
}

fn advance<R, G>(residual: &R, initial_guess: &G, target: f64, cfg: &RsConfig, history: &mut Vec<PathPoint>) -> Result<PathPoint>
where
    R: Fn(&[f64], f64) -> Result<Vec<f64>>,
    G: Fn(f64) -> Vec<f64>,
{
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidInput(format!("zeta must lie in (0, 1), got {target}")));
    }
    if target <= cfg.path_start && history.is_empty() {
        return solve_at(residual, target, &initial_guess(target), cfg);
    }
    if history.is_empty() {
        let first = solve_at(residual, cfg.path_start, &initial_guess(cfg.path_start), cfg)?;
        history.push(first);
    }
    if let Some(last) = history.last() {
        if target < last.zeta {
            // Going backwards: restart from the closest earlier point.
            let best = history
                .iter()
                .rfind(|p| p.zeta <= target)
                .cloned()
                .map_or_else(|| initial_guess(target), |p| p.x);
            return solve_at(residual, target, &best, cfg);
        }
    }
    let mut step = cfg.zeta_step;
    loop {
        let last = history.last().expect("non-empty history").clone();
        if (target - last.zeta).abs() <= 1e-14 {
            return Ok(PathPoint { zeta: target, ..last });
        }
        let next_zeta = (last.zeta + step).min(target);
        let guess = predict(history, next_zeta);
        match solve_at(residual, next_zeta, &guess, cfg) {
            Ok(point) => {
                history.push(point);
                if next_zeta >= target {
                    return Ok(history.last().unwrap().clone());
                }
                step = (step * 1.5).min(cfg.zeta_step);
            }
            Err(e) => {
                step *= 0.5;
                if step < cfg.min_zeta_step {
                    return Err(e);
                }
            }
        }
    }
}

fn predict(history: &[PathPoint], zeta: f64) -> Vec<f64> {
    let n = history.len();
    let last = &history[n - 1];
    if n < 2 {
        return last.x.clone();
    }
    let prev = &history[n - 2];
    let dz = last.zeta - prev.zeta;
    if dz <= 0.0 {
        return last.x.clone();
    }
    let t = (zeta - last.zeta) / dz;
    last.x.iter().zip(&prev.x).map(|(a, b)| a + t * (a - b)).collect()
}

/// Sweeps `targets` in increasing order (returning results in the caller's
/// order) and certifies each converged point against `doubled`, the same
/// equations evaluated with doubled quadrature orders.
pub(crate) fn certified_sweep<R, D, G, F, T>(
    residual: &R,
    doubled: &D,
    initial_guess: &G,
    targets: &[f64],
    cfg: &RsConfig,
    finish: F,
) -> Vec<Result<T>>
where
    R: Fn(&[f64], f64) -> Result<Vec<f64>>,
    D: Fn(&[f64], f64) -> Result<Vec<f64>>,
    G: Fn(f64) -> Vec<f64>,
    F: Fn(&PathPoint, bool) -> Result<T>,
{
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&i, &j| targets[i].total_cmp(&targets[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| targets[i]).collect();
    let points = sweep(residual, initial_guess, &sorted, cfg);
    let mut out: Vec<Option<Result<T>>> = (0..targets.len()).map(|_| None).collect();
    for (k, point) in order.into_iter().zip(points) {
        out[k] = Some(point.and_then(|p| {
            let certified = sup(&doubled(&p.x, p.zeta)?) <= 10.0 * cfg.residual_tol;
            finish(&p, certified)
        }));
    }
    out.into_iter().map(|r| r.expect("every target visited")).collect()
}
