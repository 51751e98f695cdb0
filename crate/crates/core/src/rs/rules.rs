//! Probability-weighted quadrature rules for the averages in the RS
//! equations.
//!
//! Gaussian averages use Gauss-Hermite nodes. Averages over the noise laws
//! use composite Gauss-Legendre rules on a truncated interval of the
//! standardized noise variable `e` (data `y = phi0 + sigma0 * e`); the
//! densities decay at least like `exp(-|e|)` on both sides, so the
//! truncation error is far below the solver tolerance, and the panel rule
//! copes with the `F^(1/c) log F`-type endpoint behaviour that defeats a
//! plain Gauss-Laguerre rule after the usual exponential substitution.

use crate::error::Result;
use crate::models::noise::{frailty_log_density, std_log_density};
use crate::models::NoiseFamily;
use crate::numerics::{composite_legendre, gauss_rule, QuadratureKind};
use rayon::prelude::*;

/// Nodes and probability weights (summing to one).
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mean<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Weighted mean of a vector-valued integrand, evaluated in parallel
    /// and summed in node order so results do not depend on the thread
    /// count.
    pub fn par_mean<const K: usize, F>(&self, f: F) -> [f64; K]
    where
        F: Fn(f64) -> [f64; K] + Sync,
    {
        let parts: Vec<[f64; K]> = self.nodes.par_iter().map(|&x| f(x)).collect();
        let mut acc = [0.0; K];
        for (part, &w) in parts.iter().zip(&self.weights) {
            for (a, v) in acc.iter_mut().zip(part) {
                *a += w * v;
            }
        }
        acc
    }

    /// Sequential counterpart of [`Rule::par_mean`].
    pub fn mean_array<const K: usize, F>(&self, f: F) -> [f64; K]
    where
        F: Fn(f64) -> [f64; K],
    {
        let mut acc = [0.0; K];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            for (a, v) in acc.iter_mut().zip(f(x)) {
                *a += w * v;
            }
        }
        acc
    }
}

/// Standard normal rule of the given order.
pub fn gaussian(order: usize) -> Result<Rule> {
    let r = gauss_rule(QuadratureKind::Hermite, order)?;
    Ok(Rule { nodes: r.nodes, weights: r.weights })
}

/// Standard normal rule from composite Gauss-Legendre panels on
/// `[-12, 12]`, for integrands with sharp transitions in the Gaussian
/// variable.
pub fn gaussian_panels(panels: usize, order: usize) -> Result<Rule> {
    noise(NoiseFamily::Gaussian, 0.0, panels, order)
}

/// Integration interval for the standardized noise variable.
pub fn noise_interval(noise: NoiseFamily, theta0: f64) -> (f64, f64) {
    match noise {
        NoiseFamily::Gumbel => (-4.0, 40.0),
        NoiseFamily::Logistic => (-40.0, 40.0),
        NoiseFamily::Gaussian => (-12.0, 12.0),
        // e = -log(s); the s-tail is polynomial with exponent 1/theta0.
        NoiseFamily::GammaFrailty => (-(4.0f64.max(40.0 * theta0) + 10.0), 40.0),
    }
}

/// Log-density of the standardized noise `e` (frailty: `e = -log s`).
pub fn noise_log_density(noise: NoiseFamily, theta0: f64, e: f64) -> f64 {
    match noise {
        NoiseFamily::GammaFrailty => frailty_log_density(e, theta0).value,
        other => std_log_density(other, e).value,
    }
}

/// Composite rule for the standardized noise law. `panels` applies to an
/// interval of the Gumbel length; wider intervals get proportionally more.
pub fn noise(noise: NoiseFamily, theta0: f64, panels: usize, order: usize) -> Result<Rule> {
    let (lo, hi) = noise_interval(noise, theta0);
    let scale = ((hi - lo) / 44.0).ceil().max(1.0) as usize;
    let (nodes, mut weights) = composite_legendre(lo, hi, panels * scale, order)?;
    for (w, &e) in weights.iter_mut().zip(&nodes) {
        *w *= noise_log_density(noise, theta0, e).exp();
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(Rule { nodes, weights })
}

/// Fisher information for a location shift of the standardized noise,
/// `E[(d/de log p(e))^2]`.
pub fn location_information(noise: NoiseFamily, theta0: f64) -> Result<f64> {
    let rule = self::noise(noise, theta0, 8, 32)?;
    Ok(rule.mean(|e| {
        let d1 = match noise {
            NoiseFamily::GammaFrailty => frailty_log_density(e, theta0).dr,
            other => std_log_density(other, e).d1,
        };
        d1 * d1
    }))
}
