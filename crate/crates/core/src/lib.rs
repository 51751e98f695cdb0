//! Overfitting bias in maximum-likelihood regression for survival models.
//!
//! The crate solves the replica-symmetric order-parameter equations that
//! describe the asymptotic distribution of ML estimators when the number of
//! covariates `p` grows proportionally with the sample size `N`
//! (`zeta = p / N`), fits Weibull, log-logistic and gamma-frailty models by
//! maximum likelihood, turns the theory into correction factors, and runs
//! Monte-Carlo studies that compare the two.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correction;
pub mod error;
pub mod mle;
pub mod models;
pub mod numerics;
pub mod rng;
pub mod rs;
pub mod simlab;

pub use error::{Error, Result};
pub use mle::{FitOptions, MLEstimate};
pub use models::{Covariance, Dataset, Family, LogLinearForm, ModelSpec, NoiseFamily, Nuisance};
pub use correction::{build_correction_table, solve_correction_grid, GridSolutions, correct_loglinear, correct_weibull_native, correct_loglogistic_native, invert_frailty_theta, CorrectionTable};
pub use numerics::{FixedPointConfig, QuadratureKind, QuadratureRule};
pub use rs::{rs_to_scatter_stats, RsConfig, RsModel, RsSolution};
pub use simlab::{compare_to_theory, run_plan, summarize, Comparison, SimulationPlan, SimulationSummary};
