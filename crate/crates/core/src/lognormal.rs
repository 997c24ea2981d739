//! Multivariate log-normal moments: if `Y ~ N(theta, Sigma)` and `X = exp(Y)` then
//! `E[X_k] = exp(theta_k + Sigma_kk / 2)` and
//! `Cov[X_k, X_l] = E[X_k] E[X_l] (exp(Sigma_kl) - 1)`.

use crate::array::{unstack, ArrayLayout, CellTable};
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::kronecker::{symmetrize, Matrix, Vector};

/// Largest accepted `theta_k + Sigma_kk / 2`.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LogNormalSummary {
    pub location: Vector,
    pub covariance: Matrix,
}

impl LogNormalSummary {
    pub fn new(location: Vector, covariance: Matrix) -> Result<Self> {
        if covariance.shape() != (location.len(), location.len()) {
            return Err(Error::Dimension(format!(
                "location has {} entries but covariance is {}x{}",
                location.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        Ok(Self { location, covariance })
    }

    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    fn exponent(&self, k: usize) -> Result<f64> {
        let e = self.location[k] + 0.5 * self.covariance[(k, k)];
        if e > EXPONENT_LIMIT {
            return Err(Error::Overflow { index: k, exponent: e });
        }
        Ok(e)
    }

    pub fn raw_mean(&self, k: usize) -> Result<f64> {
        Ok(self.exponent(k)?.exp())
    }

    pub fn raw_cov(&self, k: usize, l: usize) -> Result<f64> {
        Ok(self.raw_mean(k)? * self.raw_mean(l)? * self.covariance[(k, l)].exp_m1())
    }

    pub fn raw_means(&self) -> Result<Vector> {
        let mut out = Vector::zeros(self.len());
        for k in 0..self.len() {
            out[k] = self.raw_mean(k)?;
        }
        Ok(out)
    }

    /// Full raw-scale covariance `E E^T o (exp(Sigma) - 1)`.
    pub fn raw_covariance(&self) -> Result<Matrix> {
        let mean = self.raw_means()?;
        let mut c = Matrix::from_fn(self.len(), self.len(), |k, l| {
            mean[k] * mean[l] * self.covariance[(k, l)].exp_m1()
        });
        symmetrize(&mut c);
        Ok(c)
    }
}

/// Raw-scale fitted values `exp(Y_hat + diag(Omega) / 2)` unstacked by cell, and their
/// covariance.
pub fn fitted_raw(fit: &FitResult, layout: &ArrayLayout) -> Result<(CellTable, Matrix)> {
    let summary = LogNormalSummary::new(fit.y_hat.clone(), fit.omega_fit.clone())?;
    let means = summary.raw_means()?;
    Ok((unstack(&means, layout)?, summary.raw_covariance()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(theta: f64, var: f64) -> LogNormalSummary {
        LogNormalSummary::new(Vector::from_element(1, theta), Matrix::from_element(1, 1, var)).unwrap()
    }

    #[test]
    fn degenerate_and_doubling() {
        assert_eq!(single(0.0, 0.0).raw_mean(0).unwrap(), 1.0);
        assert_relative_eq!(single(0.0, 2.0 * 2f64.ln()).raw_mean(0).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn independent_components_have_zero_covariance() {
        let s = LogNormalSummary::new(
            Vector::from_row_slice(&[0.1, 0.2]),
            Matrix::from_row_slice(2, 2, &[0.04, 0.0, 0.0, 0.09]),
        )
        .unwrap();
        assert_eq!(s.raw_cov(0, 1).unwrap(), 0.0);
        let m = s.raw_mean(1).unwrap();
        assert_relative_eq!(s.raw_cov(1, 1).unwrap(), m * m * 0.09f64.exp_m1(), epsilon = 1e-15);
    }

    #[test]
    fn overflow_guard() {
        assert!(matches!(single(699.0, 4.0).raw_mean(0), Err(Error::Overflow { index: 0, .. })));
        assert!(single(699.0, 1.0).raw_mean(0).is_ok());
    }

    #[test]
    fn constant_variance_gives_constant_cov() {
        let s2 = 0.09;
        let s = LogNormalSummary::new(Vector::from_row_slice(&[-1.0, 0.5, 3.0]), Matrix::identity(3, 3) * s2).unwrap();
        for k in 0..3 {
            let cov = s.raw_cov(k, k).unwrap().sqrt() / s.raw_mean(k).unwrap();
            assert_relative_eq!(cov, s2.exp_m1().sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(LogNormalSummary::new(Vector::zeros(2), Matrix::zeros(3, 3)).is_err());
    }
}
