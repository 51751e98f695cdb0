use super::objective::{Evaluation, Objective};
use super::{FitOptions, MLEstimate, NuisanceHat};
use crate::error::{Error, Result};
use crate::models::noise::std_moments;
use crate::models::{Dataset, Family, NoiseFamily};
use nalgebra::{DMatrix, DVector};

/// Value, gradient and Hessian action of the log-likelihood of a data set
/// at natural parameters `params` (see [`Objective`]).
pub fn loglik_grad_hess(dataset: &Dataset, family: Family, params: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    let obj = Objective::new(&dataset.x, &dataset.log_responses(), family.noise())?;
    let ev = obj.evaluate(&DVector::from_column_slice(params))?;
    Ok((ev.value, ev.gradient.iter().copied().collect(), -ev.hessian.negative_dense()))
}

/// Fits a family to a data set.
pub fn fit(dataset: &Dataset, family: Family, opts: &FitOptions) -> Result<MLEstimate> {
    fit_log_linear(&dataset.x, &dataset.log_responses(), family.noise(), opts)
}

/// Moment estimates `(phi, shape)` from the responses alone.
pub fn moment_start(y: &[f64], noise: NoiseFamily) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    match noise {
        NoiseFamily::GammaFrailty => {
            // Var(log s) = pi^2/6 + trigamma(1/theta) ~ pi^2/6 + theta + theta^2/2.
            let excess = var - std::f64::consts::PI.powi(2) / 6.0;
            let theta = if excess > 0.0 { (-1.0 + (1.0 + 2.0 * excess).sqrt()).clamp(0.05, 5.0) } else { 0.05 };
            // y = eta + phi - log s with E[log s] = -gamma - digamma(1/theta) - log(theta).
            let e_log_s = -crate::numerics::EULER_GAMMA - statrs::function::gamma::digamma(1.0 / theta) - theta.ln();
            (mean + e_log_s, theta)
        }
        _ => {
            let (m, v) = std_moments(noise);
            let sigma = (var / v).sqrt().max(1e-3);
            (mean - sigma * m, sigma)
        }
    }
}

fn sup(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Distance from the `theta = 0` bound inside which an outward-pointing
/// gradient makes the bound active.
const BOUND_EPS: f64 = 1e-6;

/// Gradient with the shape component zeroed when `theta` sits on its lower
/// bound and the likelihood would increase only by leaving the domain.
fn projected_gradient(obj: &Objective, params: &DVector<f64>, grad: &DVector<f64>) -> (DVector<f64>, bool) {
    let mut g = grad.clone();
    let k = obj.p() + 1;
    if obj.noise() == NoiseFamily::GammaFrailty && params[k] <= 0.0 && grad[k] <= 0.0 {
        g[k] = 0.0;
    }
    // Near the bound, an outward gradient fixes theta; this avoids the
    // overshoot-and-clip zigzag of a plain projected Newton step.
    let active = obj.noise() == NoiseFamily::GammaFrailty && params[k] <= BOUND_EPS && grad[k] <= 0.0;
    (g, active)
}

/// Newton (or damped Newton) ascent direction for the free coordinates.
fn direction(ev: &Evaluation<'_>, grad: &DVector<f64>, active: bool) -> DVector<f64> {
    let mut neg_h = ev.hessian.negative_dense();
    let dim = neg_h.nrows();
    let mut g = grad.clone();
    if active {
        let k = dim - 1;
        for j in 0..dim {
            neg_h[(k, j)] = 0.0;
            neg_h[(j, k)] = 0.0;
        }
        neg_h[(k, k)] = 1.0;
        g[k] = 0.0;
    }
    if let Some(ch) = neg_h.clone().cholesky() {
        return ch.solve(&g);
    }
    // Not positive definite: shift the spectrum until it is.
    let scale = (0..dim).map(|i| neg_h[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut mu = 1e-8 * scale;
    while mu < 1e8 * scale {
        let mut shifted = neg_h.clone();
        for i in 0..dim {
            shifted[(i, i)] += mu;
        }
        if let Some(ch) = shifted.cholesky() {
            return ch.solve(&g);
        }
        mu *= 10.0;
    }
    g / scale
}

/// Fits `y = x'varphi + Z` by Newton's method with backtracking.
pub fn fit_log_linear(x: &DMatrix<f64>, y: &[f64], noise: NoiseFamily, opts: &FitOptions) -> Result<MLEstimate> {
    let (n, p) = x.shape();
    if n <= p || p == 0 {
        return Err(Error::InvalidInput(format!("need N > p >= 1, got N={n}, p={p}")));
    }
    let mut obj = Objective::new(x, y, noise)?;
    if let Some(sigma) = opts.fixed_sigma {
        obj = obj.with_fixed_scale(sigma)?;
    }
    let mut params = match &opts.start {
        Some((varphi, phi, shape)) => {
            if varphi.len() != p {
                return Err(Error::InvalidInput("starting point has the wrong length".into()));
            }
            obj.from_log_linear(varphi, *phi, *shape)
        }
        None => {
            let (phi, shape) = moment_start(y, noise);
            obj.from_log_linear(&vec![0.0; p], phi, opts.fixed_sigma.unwrap_or(shape))
        }
    };
    if !obj.in_domain(&params) {
        return Err(Error::Domain("starting point outside the likelihood domain".into()));
    }

    let tol = opts.grad_tol * n as f64;
    let shape_idx = (obj.dim() == p + 2).then_some(p + 1);
    let mut iterations = 0;
    let mut converged = false;
    let mut ev = obj.evaluate(&params)?;
    let mut grad_norm;
    loop {
        let (g, active) = projected_gradient(&obj, &params, &ev.gradient);
        grad_norm = sup(&g);
        if grad_norm <= tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut dir = direction(&ev, &g, active);
        if dir.dot(&g) <= 0.0 {
            dir = g.clone();
        }
        if active {
            // Move theta onto the bound along with the free step.
            dir[p + 1] = -params[p + 1];
        }
        // Keep rho strictly positive; theta is projected onto [0, inf).
        let mut step = 1.0;
        if let (Some(k), true) = (shape_idx, noise != NoiseFamily::GammaFrailty) {
            if params[k] + dir[k] <= 0.0 {
                step = 0.5 * params[k] / (-dir[k]);
            }
        }
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand = &params + step * &dir;
            if noise == NoiseFamily::GammaFrailty {
                let k = p + 1;
                cand[k] = cand[k].max(0.0);
            }
            if obj.in_domain(&cand) {
                if let Ok(v) = obj.value(&cand) {
                    let gain = g.dot(&(&cand - &params));
                    if v >= ev.value + 1e-4 * gain.max(0.0) && v >= ev.value {
                        accepted = Some(cand);
                        break;
                    }
                    // Near the optimum the change in value drowns in rounding;
                    // fall back to requiring a smaller gradient.
                    let noise = 64.0 * f64::EPSILON * ev.value.abs().max(1.0);
                    if v >= ev.value - noise {
                        if let Ok(cev) = obj.evaluate(&cand) {
                            if sup(&projected_gradient(&obj, &cand, &cev.gradient).0) < grad_norm {
                                accepted = Some(cand);
                                break;
                            }
                        }
                    }
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // No ascent possible at working precision.
            break;
        };
        params = next;
        if params.rows(0, p).iter().any(|b| b.abs() > opts.beta_bound) {
            return Err(Error::Divergence(format!(
                "regression coefficients exceed {} after {iterations} iterations; zeta = {:.3} may be too close to 1",
                opts.beta_bound,
                p as f64 / n as f64
            )));
        }
        ev = obj.evaluate(&params)?;
    }

    let (varphi, phi, shape) = obj.to_log_linear(&params);
    let nuisance_hat = match noise {
        NoiseFamily::GammaFrailty => NuisanceHat { phi, sigma: None, theta: Some(shape) },
        _ => NuisanceHat { phi, sigma: Some(shape), theta: None },
    };
    let loglik = ev.value + y.iter().sum::<f64>();
    Ok(MLEstimate { noise, beta_hat: varphi, nuisance_hat, loglik, grad_norm, iterations, converged, n, p })
}
