use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Weight functions supported by [`gauss_rule`]. All measures are
/// normalized to unit mass:
///
/// * `Hermite`: the standard normal density on the real line;
/// * `Laguerre`: `exp(-x)` on `[0, inf)`;
/// * `Legendre`: the uniform density on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadratureKind {
    Hermite,
    Laguerre,
    Legendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Weighted sum of `f` over the nodes.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub const MAX_ORDER: usize = 256;

/// Recurrence coefficients `(alpha_k, beta_k)` of the monic orthogonal
/// polynomials, `pi_{k+1} = (x - alpha_k) pi_k - beta_k pi_{k-1}`, on the
/// symmetric `[-1, 1]` interval for Legendre.
fn recurrence(kind: QuadratureKind, k: usize) -> (f64, f64) {
    let kf = k as f64;
    match kind {
        QuadratureKind::Hermite => (0.0, kf),
        QuadratureKind::Laguerre => (2.0 * kf + 1.0, kf * kf),
        QuadratureKind::Legendre => (0.0, kf * kf / (4.0 * kf * kf - 1.0)),
    }
}

/// Evaluates the orthonormal polynomials at `x`. Returns
/// `(p_n(x), p_n'(x), sum_{k<n} p_k(x)^2)`.
fn orthonormal_eval(kind: QuadratureKind, n: usize, x: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let (alpha, beta_k) = recurrence(kind, k);
        let sqrt_beta_k = beta_k.sqrt();
        let sqrt_beta_next = recurrence(kind, k + 1).1.sqrt();
        let p_next = ((x - alpha) * p - sqrt_beta_k * p_prev) / sqrt_beta_next;
        let dp_next = ((x - alpha) * dp + p - sqrt_beta_k * dp_prev) / sqrt_beta_next;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp, sum_sq)
}

/// Gauss rule of the given kind and order (`1..=256`).
///
/// Nodes come from the eigenvalues of the Jacobi matrix and are then
/// polished by Newton steps on the orthonormal polynomial; weights are
/// `1 / sum_k p_k(x)^2`, which is accurate even where the eigenvector
/// formula loses relative precision.
pub fn gauss_rule(kind: QuadratureKind, order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidInput(format!(
            "quadrature order must lie in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let n = order;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let (alpha, _) = recurrence(kind, k);
        jacobi[(k, k)] = alpha;
        if k + 1 < n {
            let off = recurrence(kind, k + 1).1.sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_eval(kind, n, *x);
            if dp == 0.0 || !dp.is_finite() || !p.is_finite() {
                break;
            }
            let step = p / dp;
            if step.abs() > 1e-6 * (1.0 + x.abs()) {
                break;
            }
            *x -= step;
        }
        let (_, _, sum_sq) = orthonormal_eval(kind, n, *x);
        weights.push(if sum_sq.is_finite() { 1.0 / sum_sq } else { 0.0 });
    }
    if kind == QuadratureKind::Hermite {
        // Enforce exact symmetry.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
    }
    if kind == QuadratureKind::Legendre {
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        for x in nodes.iter_mut() {
            *x = 0.5 * (*x + 1.0);
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(QuadratureRule { kind, order, nodes, weights })
}

/// Composite Gauss-Legendre rule for `int_lo^hi f(x) dx` over `panels` equal
/// sub-intervals with `order` nodes each. Weights include the panel widths.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(hi > lo) || panels == 0 {
        return Err(Error::InvalidInput("composite rule needs hi > lo and panels >= 1".into()));
    }
    let base = gauss_rule(QuadratureKind::Legendre, order)?;
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let start = lo + k as f64 * width;
        for (&x, &w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(start + width * x);
            weights.push(width * w);
        }
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_two_point() {
        let r = gauss_rule(QuadratureKind::Hermite, 2).unwrap();
        assert!((r.nodes[0] + 1.0).abs() < 1e-14 && (r.nodes[1] - 1.0).abs() < 1e-14);
        assert!((r.weights[0] - 0.5).abs() < 1e-14 && (r.weights[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn legendre_midpoint() {
        let r = gauss_rule(QuadratureKind::Legendre, 1).unwrap();
        assert_eq!(r.nodes, vec![0.5]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn laguerre_five_second_moment() {
        let r = gauss_rule(QuadratureKind::Laguerre, 5).unwrap();
        assert!((r.integrate(|x| x * x) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn moments_for_all_orders() {
        for order in [8, 16, 32, 64, 128, 256] {
            let h = gauss_rule(QuadratureKind::Hermite, order).unwrap();
            assert!((h.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(h.integrate(|x| x).abs() < 1e-10);
            assert!(h.integrate(|x| x * x * x).abs() < 1e-10);
            assert!((h.integrate(|x| x * x) - 1.0).abs() < 1e-10, "hermite {order}");
            assert!((h.integrate(|x| x.powi(4)) - 3.0).abs() < 1e-9, "hermite {order}");

            let l = gauss_rule(QuadratureKind::Laguerre, order).unwrap();
            assert!((l.integrate(|_| 1.0) - 1.0).abs() < 1e-10);
            assert!((l.integrate(|x| x) - 1.0).abs() < 1e-10, "laguerre {order}");
            assert!((l.integrate(|x| x * x) - 2.0).abs() < 1e-9, "laguerre {order}");

            let g = gauss_rule(QuadratureKind::Legendre, order).unwrap();
            assert!((g.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
            assert!((g.integrate(|x| x) - 0.5).abs() < 1e-12);
            assert!(g.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn legendre_exact_degree() {
        let g = gauss_rule(QuadratureKind::Legendre, 10).unwrap();
        // Exact for polynomials up to degree 19.
        assert!((g.integrate(|x| x.powi(19)) - 1.0 / 20.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(gauss_rule(QuadratureKind::Hermite, 0).is_err());
        assert!(gauss_rule(QuadratureKind::Hermite, 257).is_err());
    }

    #[test]
    fn composite_integrates_gaussian_tail() {
        let (x, w) = composite_legendre(-10.0, 10.0, 8, 24).unwrap();
        let total: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x / 2.0).exp()).sum();
        assert!((total - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
    }
}
