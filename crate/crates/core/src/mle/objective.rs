//! Log-likelihood of the log-linear model with gradient and Hessian.
//!
//! Location-scale noise (Gumbel, logistic, Gaussian) is handled in the
//! natural parameters `(b, alpha, rho)` with `rho = 1/sigma`,
//! `alpha = phi / sigma` and `b = varphi / sigma`: the standardized
//! residual `rho y - x'b - alpha` is linear in them and the standardized
//! log-densities are concave, so the log-likelihood is jointly concave.
//! Frailty noise uses `(varphi, phi, theta)` directly.

use crate::error::{Error, Result};
use crate::models::noise::{frailty_log_density, std_log_density};
use crate::models::NoiseFamily;
use nalgebra::{DMatrix, DVector};

/// Log-likelihood of `y = -log t` under a noise family, with the
/// covariates augmented by an intercept column.
#[derive(Debug, Clone)]
pub struct Objective {
    noise: NoiseFamily,
    /// `[X, 1]`, `N x (p + 1)`.
    xa: DMatrix<f64>,
    y: DVector<f64>,
    /// Fixed `rho` for location-scale families, if any.
    fixed_rho: Option<f64>,
}

/// Matrix-free Hessian of the log-likelihood, `H v` in `O(N p)`.
///
/// `H = -[Xa' W Xa, Xa' c; c' Xa, corner]` restricted to the free
/// coordinates, where `W` is diagonal.
#[derive(Debug, Clone)]
pub struct HessianAction<'a> {
    xa: &'a DMatrix<f64>,
    /// Curvature weights `w_i >= 0` of the negative Hessian.
    weights: DVector<f64>,
    /// Per-observation cross weights with the last (shape) coordinate.
    cross: Option<DVector<f64>>,
    corner: f64,
}

impl HessianAction<'_> {
    pub fn dim(&self) -> usize {
        self.xa.ncols() + usize::from(self.cross.is_some())
    }

    /// `H v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let k = self.xa.ncols();
        let head = v.rows(0, k);
        let mut z = self.xa * head;
        if let Some(c) = &self.cross {
            // z_i = w_i (xa_i' v_head) + c_i v_last, so Xa' z = Xa'W Xa v + Xa' c v_last
            let last = v[k];
            for i in 0..z.len() {
                z[i] = self.weights[i] * z[i] + c[i] * last;
            }
        } else {
            z.component_mul_assign(&self.weights);
        }
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, k).copy_from(&(self.xa.transpose() * &z));
        if let Some(c) = &self.cross {
            let xh = self.xa * head;
            out[k] = c.dot(&xh) + self.corner * v[k];
        }
        -out
    }

    /// Dense negative Hessian `-H`.
    pub fn negative_dense(&self) -> DMatrix<f64> {
        let k = self.xa.ncols();
        let mut scaled = self.xa.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= self.weights[i].sqrt();
        }
        let block = scaled.tr_mul(&scaled);
        match &self.cross {
            None => block,
            Some(c) => {
                let mut m = DMatrix::zeros(k + 1, k + 1);
                m.view_mut((0, 0), (k, k)).copy_from(&block);
                let xc = self.xa.tr_mul(c);
                for j in 0..k {
                    m[(j, k)] = xc[j];
                    m[(k, j)] = xc[j];
                }
                m[(k, k)] = self.corner;
                m
            }
        }
    }
}

/// Value, gradient and Hessian of the log-likelihood at one point.
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: HessianAction<'a>,
}

impl Objective {
    pub fn new(x: &DMatrix<f64>, y: &[f64], noise: NoiseFamily) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n || n == 0 {
            return Err(Error::InvalidInput("response length must match covariate rows".into()));
        }
        let mut xa = DMatrix::from_element(n, p + 1, 1.0);
        xa.view_mut((0, 0), (n, p)).copy_from(x);
        Ok(Self { noise, xa, y: DVector::from_column_slice(y), fixed_rho: None })
    }

    /// Holds `rho = 1/sigma` fixed (location-scale families only).
    pub fn with_fixed_scale(mut self, sigma: f64) -> Result<Self> {
        if !self.noise.is_location_scale() || !(sigma > 0.0) {
            return Err(Error::InvalidInput("a fixed scale needs a location-scale family and sigma > 0".into()));
        }
        self.fixed_rho = Some(1.0 / sigma);
        Ok(self)
    }

    pub fn noise(&self) -> NoiseFamily {
        self.noise
    }

    pub fn n(&self) -> usize {
        self.xa.nrows()
    }

    pub fn p(&self) -> usize {
        self.xa.ncols() - 1
    }

    pub fn fixed_rho(&self) -> Option<f64> {
        self.fixed_rho
    }

    /// Number of free parameters.
    pub fn dim(&self) -> usize {
        self.xa.ncols() + usize::from(self.fixed_rho.is_none())
    }

    /// Whether `params` lies in the domain (`rho > 0`, `theta >= 0`).
    pub fn in_domain(&self, params: &DVector<f64>) -> bool {
        if params.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match (self.noise, self.fixed_rho) {
            (NoiseFamily::GammaFrailty, _) => params[self.xa.ncols()] >= 0.0,
            (_, None) => params[self.xa.ncols()] > 0.0,
            (_, Some(_)) => true,
        }
    }

    /// Log-likelihood of the responses on the `y` scale.
    pub fn value(&self, params: &DVector<f64>) -> Result<f64> {
        Ok(self.evaluate_impl(params, false)?.0)
    }

    /// Value, gradient and Hessian action.
    pub fn evaluate(&self, params: &DVector<f64>) -> Result<Evaluation<'_>> {
        let (value, gradient, weights, cross, corner) = self.evaluate_impl(params, true)?;
        Ok(Evaluation {
            value,
            gradient: gradient.expect("gradient requested"),
            hessian: HessianAction { xa: &self.xa, weights: weights.expect("weights requested"), cross, corner },
        })
    }

    #[allow(clippy::type_complexity)]
    fn evaluate_impl(
        &self,
        params: &DVector<f64>,
        derivs: bool,
    ) -> Result<(f64, Option<DVector<f64>>, Option<DVector<f64>>, Option<DVector<f64>>, f64)> {
        if params.len() != self.dim() {
            return Err(Error::InvalidInput(format!("expected {} parameters, got {}", self.dim(), params.len())));
        }
        if !self.in_domain(params) {
            return Err(Error::Domain("parameters outside the likelihood domain".into()));
        }
        let k = self.xa.ncols();
        let n = self.n();
        let lin = &self.xa * params.rows(0, k);
        match self.noise {
            NoiseFamily::GammaFrailty => {
                let theta = params[k];
                let mut value = 0.0;
                let mut d1 = DVector::zeros(n);
                let mut w = DVector::zeros(n);
                let mut cross = DVector::zeros(n);
                let (mut g_theta, mut h_theta) = (0.0, 0.0);
                for i in 0..n {
                    let d = frailty_log_density(self.y[i] - lin[i], theta);
                    value += d.value;
                    d1[i] = d.dr;
                    w[i] = -d.drr;
                    cross[i] = d.drtheta;
                    g_theta += d.dtheta;
                    h_theta += d.dthetatheta;
                }
                if !value.is_finite() {
                    return Err(Error::NonFinite("frailty log-likelihood".into()));
                }
                if !derivs {
                    return Ok((value, None, None, None, 0.0));
                }
                // dr/d(head) = -xa
                let mut grad = DVector::zeros(k + 1);
                grad.rows_mut(0, k).copy_from(&(-(self.xa.tr_mul(&d1))));
                grad[k] = g_theta;
                // -H_{head,theta} = -sum l_rtheta * (-xa) = Xa' l_rtheta
                Ok((value, Some(grad), Some(w), Some(cross), -h_theta))
            }
            noise => {
                let rho = self.fixed_rho.unwrap_or_else(|| params[k]);
                let mut value = n as f64 * rho.ln();
                let mut d1 = DVector::zeros(n);
                let mut w = DVector::zeros(n);
                for i in 0..n {
                    let u = rho * self.y[i] - lin[i];
                    let d = std_log_density(noise, u);
                    value += d.value;
                    d1[i] = d.d1;
                    w[i] = -d.d2;
                }
                if !value.is_finite() {
                    return Err(Error::NonFinite("log-likelihood".into()));
                }
                if !derivs {
                    return Ok((value, None, None, None, 0.0));
                }
                let mut grad = DVector::zeros(self.dim());
                grad.rows_mut(0, k).copy_from(&(-(self.xa.tr_mul(&d1))));
                if self.fixed_rho.is_some() {
                    return Ok((value, Some(grad), Some(w), None, 0.0));
                }
                grad[k] = n as f64 / rho + d1.dot(&self.y);
                // g_i = (-xa_i, y_i): -H_{head,rho} = -sum w_i y_i xa_i
                let cross = -w.component_mul(&self.y);
                let corner = w.dot(&self.y.component_mul(&self.y)) + n as f64 / (rho * rho);
                Ok((value, Some(grad), Some(w), Some(cross), corner))
            }
        }
    }

    /// Converts natural parameters to `(varphi, phi, shape)` where shape is
    /// `sigma` or `theta`.
    pub fn to_log_linear(&self, params: &DVector<f64>) -> (Vec<f64>, f64, f64) {
        let p = self.p();
        match self.noise {
            NoiseFamily::GammaFrailty => (params.rows(0, p).iter().copied().collect(), params[p], params[p + 1]),
            _ => {
                let rho = self.fixed_rho.unwrap_or_else(|| params[p + 1]);
                (params.rows(0, p).iter().map(|b| b / rho).collect(), params[p] / rho, 1.0 / rho)
            }
        }
    }

    /// Inverse of [`Objective::to_log_linear`].
    pub fn from_log_linear(&self, varphi: &[f64], phi: f64, shape: f64) -> DVector<f64> {
        let p = self.p();
        let mut out = DVector::zeros(self.dim());
        match self.noise {
            NoiseFamily::GammaFrailty => {
                out.rows_mut(0, p).copy_from_slice(varphi);
                out[p] = phi;
                out[p + 1] = shape;
            }
            _ => {
                let rho = self.fixed_rho.unwrap_or(1.0 / shape);
                for j in 0..p {
                    out[j] = varphi[j] * rho;
                }
                out[p] = phi * rho;
                if self.fixed_rho.is_none() {
                    out[p + 1] = rho;
                }
            }
        }
        out
    }

    pub fn responses(&self) -> &DVector<f64> {
        &self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random_problem(noise: NoiseFamily, n: usize, p: usize, seed: u64) -> Objective {
        let mut rng = rng_from_seed(seed);
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        Objective::new(&x, &y, noise).unwrap()
    }

    proptest! {
        #[test]
        fn gradient_and_hessian_match_finite_differences(seed in 0u64..1000, fam in 0usize..4, shape in 0.2f64..2.0) {
            let noise = [NoiseFamily::Gumbel, NoiseFamily::Logistic, NoiseFamily::Gaussian, NoiseFamily::GammaFrailty][fam];
            let obj = random_problem(noise, 50, 3, seed);
            let mut rng = rng_from_seed(seed + 1);
            let mut params = DVector::from_fn(obj.dim(), |_, _| 0.3 * { let z: f64 = StandardNormal.sample(&mut rng); z });
            params[obj.dim() - 1] = shape;
            let ev = obj.evaluate(&params).unwrap();
            let h = 1e-6;
            for j in 0..obj.dim() {
                let mut pp = params.clone();
                let mut pm = params.clone();
                pp[j] += h;
                pm[j] -= h;
                let fd = (obj.value(&pp).unwrap() - obj.value(&pm).unwrap()) / (2.0 * h);
                prop_assert!((ev.gradient[j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "grad {j}: {} vs {fd}", ev.gradient[j]);
                let gp = obj.evaluate(&pp).unwrap().gradient;
                let gm = obj.evaluate(&pm).unwrap().gradient;
                let mut e = DVector::zeros(obj.dim());
                e[j] = 1.0;
                let hcol = ev.hessian.apply(&e);
                let dense = ev.hessian.negative_dense();
                for i in 0..obj.dim() {
                    let fdh = (gp[i] - gm[i]) / (2.0 * h);
                    prop_assert!((hcol[i] - fdh).abs() <= 1e-5 * (1.0 + fdh.abs()), "hess {i},{j}: {} vs {fdh}", hcol[i]);
                    prop_assert!((dense[(i, j)] + hcol[i]).abs() <= 1e-9 * (1.0 + fdh.abs()));
                }
            }
        }
    }

    #[test]
    fn parameter_maps_round_trip() {
        for noise in [NoiseFamily::Gumbel, NoiseFamily::GammaFrailty] {
            let obj = random_problem(noise, 10, 2, 3);
            let (v, phi, s) = obj.to_log_linear(&obj.from_log_linear(&[0.3, -0.2], 0.7, 1.7));
            assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 0.2).abs() < 1e-15);
            assert!((phi - 0.7).abs() < 1e-15 && (s - 1.7).abs() < 1e-15);
        }
    }
}
