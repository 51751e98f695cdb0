//! Scatter statistics and replicate aggregation.

use crate::error::{Error, Result};

/// Slope `kappa` of the least-squares line through the origin of `beta_hat`
/// against `beta0`, and the sample standard deviation `delta` of the
/// residuals `beta_hat - kappa beta0`.
pub fn scatter_stats(beta_hat: &[f64], beta0: &[f64]) -> Result<(f64, f64)> {
    let p = beta0.len();
    if beta_hat.len() != p || p < 2 {
        return Err(Error::InvalidInput("scatter statistics need two equal-length vectors of length >= 2".into()));
    }
    let s2: f64 = beta0.iter().map(|b| b * b).sum();
    if s2 == 0.0 {
        return Err(Error::InvalidInput("true coefficients are all zero".into()));
    }
    let kappa = beta_hat.iter().zip(beta0).map(|(h, b)| h * b).sum::<f64>() / s2;
    let res: Vec<f64> = beta_hat.iter().zip(beta0).map(|(h, b)| h - kappa * b).collect();
    let mean = res.iter().sum::<f64>() / p as f64;
    let var = res.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (p - 1) as f64;
    Ok((kappa, var.sqrt()))
}

/// Arithmetic mean and standard error of the mean (`sd / sqrt(n)`).
/// Returns NaN for an empty list and a zero standard error for one value.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_doubled_recovery() {
        let b0 = [0.3, -0.2, 0.5, 0.1];
        assert_eq!(scatter_stats(&b0, &b0).unwrap(), (1.0, 0.0));
        let b2: Vec<f64> = b0.iter().map(|b| 2.0 * b).collect();
        let (k, d) = scatter_stats(&b2, &b0).unwrap();
        assert!((k - 2.0).abs() < 1e-15 && d < 1e-15);
        assert!(scatter_stats(&b0, &[0.0; 4]).is_err());
        assert!(scatter_stats(&b0[..1], &b0[..1]).is_err());
    }

    #[test]
    fn synthetic_noise_is_recovered() {
        // Noise orthogonal to beta0 leaves the slope untouched.
        let b0 = [1.0, 1.0, -1.0, -1.0];
        let noise = [0.2, -0.2, 0.1, -0.1];
        let hat: Vec<f64> = b0.iter().zip(&noise).map(|(b, e)| 1.5 * b + e).collect();
        let (k, d) = scatter_stats(&hat, &b0).unwrap();
        assert!((k - 1.5).abs() < 1e-15);
        let m = noise.iter().sum::<f64>() / 4.0;
        let sd = (noise.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / 3.0).sqrt();
        assert!((d - sd).abs() < 1e-15);
    }

    #[test]
    fn mean_se_examples() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(mean_se(&[]).0.is_nan());
    }

    proptest! {
        #[test]
        fn scale_equivariance(
            b0 in proptest::collection::vec(-1.0f64..1.0, 2..20),
            e in proptest::collection::vec(-1.0f64..1.0, 20),
            c in -3.0f64..3.0,
        ) {
            prop_assume!(b0.iter().map(|b| b * b).sum::<f64>() > 1e-3);
            let hat: Vec<f64> = b0.iter().zip(&e).map(|(b, e)| 0.8 * b + 0.3 * e).collect();
            let scaled: Vec<f64> = hat.iter().map(|h| c * h).collect();
            let (k, d) = scatter_stats(&hat, &b0).unwrap();
            let (ks, ds) = scatter_stats(&scaled, &b0).unwrap();
            prop_assert!((ks - c * k).abs() <= 1e-12 * (1.0 + k.abs()));
            prop_assert!((ds - c.abs() * d).abs() <= 1e-12 * (1.0 + d));
        }
    }
}
