//! Covariate, coefficient and response generation.

use super::family::{ModelSpec, Nuisance};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// Covariance of the covariate rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariance {
    #[default]
    Identity,
    /// Symmetric positive-definite `p x p` matrix, row-major.
    Matrix(Vec<Vec<f64>>),
}

/// Covariates and responses of one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `N x p` covariate matrix.
    pub x: DMatrix<f64>,
    /// Positive event times, length `N`.
    pub t: Vec<f64>,
    pub zeta: f64,
    pub seed: u64,
    pub covariance: Covariance,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, t: Vec<f64>, seed: u64, covariance: Covariance) -> Result<Self> {
        let (n, p) = x.shape();
        if t.len() != n {
            return Err(Error::InvalidInput(format!("{} responses for {n} covariate rows", t.len())));
        }
        if p == 0 || n <= p {
            return Err(Error::InvalidInput(format!("need N > p >= 1, got N={n}, p={p}")));
        }
        if t.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("all event times must be positive and finite".into()));
        }
        Ok(Self { x, t, zeta: p as f64 / n as f64, seed, covariance })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `y = -log t`.
    pub fn log_responses(&self) -> Vec<f64> {
        self.t.iter().map(|t| -t.ln()).collect()
    }
}

/// Symmetric square root of an SPD matrix by eigendecomposition.
pub fn symmetric_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::InvalidInput("covariance must be square".into()));
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-10 * (1.0 + a.amax()) {
        return Err(Error::InvalidInput("covariance must be symmetric".into()));
    }
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidInput("covariance is not positive definite".into()));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

fn covariance_matrix(cov: &Covariance, p: usize) -> Result<Option<DMatrix<f64>>> {
    match cov {
        Covariance::Identity => Ok(None),
        Covariance::Matrix(rows) => {
            if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                return Err(Error::InvalidInput(format!("covariance must be {p} x {p}")));
            }
            let a = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
            Ok(Some(symmetric_sqrt(&a)?))
        }
    }
}

/// Draws `beta0 ~ N(0, scale^2 I_p)`.
pub fn sample_beta0(p: usize, scale: f64, seed: u64) -> Result<Vec<f64>> {
    if p == 0 || !(scale >= 0.0) {
        return Err(Error::InvalidInput("sample_beta0 needs p >= 1 and scale >= 0".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..p)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect())
}

/// Draws one event time at linear predictor `eta` by inverse CDF (Weibull,
/// log-logistic) or as a gamma mixture of exponentials (frailty).
pub fn sample_time(rng: &mut Rng, eta: f64, nuisance: &Nuisance) -> f64 {
    match *nuisance {
        Nuisance::Weibull { lambda, rho } => {
            // S(t) = exp(-(lambda t)^rho e^eta) evaluated at an Exp(1) draw.
            let e: f64 = Exp1.sample(rng);
            ((e.ln() - eta) / rho).exp() / lambda
        }
        Nuisance::LogLogistic { lambda, rho } => {
            let u: f64 = rng.random::<f64>();
            let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            let log_r = ((u / (1.0 - u)).ln()) / rho;
            lambda * (log_r - eta).exp()
        }
        Nuisance::Frailty { lambda, theta } => {
            let e: f64 = Exp1.sample(rng);
            let frailty = if theta > 0.0 {
                Gamma::new(1.0 / theta, theta).expect("valid gamma parameters").sample(rng)
            } else {
                1.0
            };
            e / (frailty * lambda * eta.exp())
        }
    }
}

/// Draws `X` with i.i.d. `N(0, A)` rows and responses from the model.
pub fn sample_dataset(spec: &ModelSpec, n: usize, seed: u64, covariance: &Covariance) -> Result<Dataset> {
    let p = spec.p();
    if p == 0 || n <= p {
        return Err(Error::InvalidInput(format!("need N > p >= 1, got N={n}, p={p}")));
    }
    spec.nuisance0.validate()?;
    let root = covariance_matrix(covariance, p)?;
    let mut rng = rng_from_seed(seed);
    let mut x = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    if let Some(root) = root {
        x *= root;
    }
    let beta = nalgebra::DVector::from_column_slice(&spec.beta0);
    let eta = &x * beta;
    let t: Vec<f64> = eta.iter().map(|&e| sample_time(&mut rng, e, &spec.nuisance0)).collect();
    Dataset::new(x, t, seed, covariance.clone())
}
