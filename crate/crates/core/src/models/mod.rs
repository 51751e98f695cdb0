//! Parametric families, their log-linear forms, densities and samplers.

mod density;
mod family;
pub mod io;
pub mod noise;
mod sampling;

pub use density::{density, log_density, LogDensity};
pub use family::{from_log_linear, to_log_linear, weibull_unit_mean_lambda, Family, LogLinearForm, ModelSpec, NoiseFamily, Nuisance};
pub use sampling::{sample_beta0, sample_dataset, sample_time, symmetric_sqrt, Covariance, Dataset};
