//! Tweedie family algebra in the additive form `Tw*_p(theta, lambda)` and the moment
//! and correlation structure of log-Tweedie common-shock models.
//!
//! With `alpha = (2 - p) / (1 - p)`:
//! `E = lambda (theta / (alpha - 1))^(alpha - 1)` and
//! `Var = lambda (theta / (alpha - 1))^(alpha - 2)`; for `p = 1`, `E = Var = lambda e^theta`.

use crate::error::{Error, Result};
use crate::kronecker::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweedieParams {
    pub p: f64,
    pub theta: f64,
    pub lambda: f64,
    /// `alpha = (2 - p) / (1 - p)`; infinite for `p = 1`.
    pub alpha_index: f64,
}

fn alpha_of(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        (2.0 - p) / (1.0 - p)
    }
}

impl TweedieParams {
    pub fn new(p: f64, theta: f64, lambda: f64) -> Result<Self> {
        if !p.is_finite() || (p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("power p = {p} lies in the excluded range (0, 1)")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda = {lambda} must be > 0")));
        }
        if !theta.is_finite() {
            return Err(Error::Domain(format!("theta = {theta} is not finite")));
        }
        let alpha_index = alpha_of(p);
        if p != 0.0 && p != 1.0 && theta / (alpha_index - 1.0) <= 0.0 {
            return Err(Error::Domain(format!(
                "theta = {theta} outside the domain for p = {p} (need theta / (alpha - 1) > 0)"
            )));
        }
        Ok(Self {
            p,
            theta,
            lambda,
            alpha_index,
        })
    }

    fn kappa(&self) -> f64 {
        self.theta / (self.alpha_index - 1.0)
    }
}

/// `(E[X], Var[X])`.
pub fn tweedie_mean_var(params: &TweedieParams) -> (f64, f64) {
    if params.p == 1.0 {
        let m = params.lambda * params.theta.exp();
        return (m, m);
    }
    let a = params.alpha_index;
    let k = params.kappa();
    (params.lambda * k.powf(a - 1.0), params.lambda * k.powf(a - 2.0))
}

/// Parameters with the given mean and variance. For `p = 1` the mean must equal the
/// variance, and `lambda = Var`, `theta = ln(E / lambda) = 0`.
pub fn tweedie_from_moments(mean: f64, variance: f64, p: f64) -> Result<TweedieParams> {
    if !(variance > 0.0) || (p != 0.0 && !(mean > 0.0)) {
        return Err(Error::Domain(format!(
            "moments (mean {mean}, variance {variance}) must be positive"
        )));
    }
    if p == 1.0 {
        if ((mean - variance) / variance).abs() > 1e-12 {
            return Err(Error::Domain("p = 1 requires mean equal to variance".into()));
        }
        return TweedieParams::new(1.0, (mean / variance).ln(), variance);
    }
    let a = alpha_of(p);
    if p == 0.0 {
        return TweedieParams::new(0.0, mean / variance, variance);
    }
    let theta = (a - 1.0) * mean / variance;
    let lambda = variance.powf(a - 1.0) / mean.powf(a - 2.0);
    TweedieParams::new(p, theta, lambda)
}

/// `1 / CoV^2 = lambda (theta / (alpha - 1))^alpha`.
pub fn inverse_cov_squared(params: &TweedieParams) -> f64 {
    if params.p == 1.0 {
        return params.lambda * params.theta.exp();
    }
    params.lambda * params.kappa().powf(params.alpha_index)
}

/// `k X ~ Tw*_p(theta / k, lambda k^alpha)`.
pub fn tweedie_scale(params: &TweedieParams, k: f64) -> Result<TweedieParams> {
    if params.p == 1.0 {
        return Err(Error::Domain("scaling is not closed for p = 1".into()));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!("scale factor {k} must be > 0")));
    }
    TweedieParams::new(params.p, params.theta / k, params.lambda * k.powf(params.alpha_index))
}

/// `V1 + V2 ~ Tw*_p(theta, lambda1 + lambda2)` for a common `theta` and `p`.
pub fn tweedie_add(a: &TweedieParams, b: &TweedieParams) -> Result<TweedieParams> {
    if a.p != b.p {
        return Err(Error::Domain(format!("powers differ: {} and {}", a.p, b.p)));
    }
    if a.theta != b.theta {
        return Err(Error::Domain(format!(
            "sum of Tweedie variates with theta {} and {} is not Tweedie",
            a.theta, b.theta
        )));
    }
    TweedieParams::new(a.p, a.theta, a.lambda + b.lambda)
}

/// Reproductive form `X / lambda ~ Tw*_p(lambda theta, lambda^(1 - alpha))`.
pub fn reproductive(params: &TweedieParams) -> Result<TweedieParams> {
    tweedie_scale(params, 1.0 / params.lambda)
}

/// Shock coefficient `theta_shock / theta_cell` and the distribution of the scaled shock,
/// `Tw*_p(theta_cell, (theta_shock / theta_cell)^alpha lambda_shock)`.
pub fn shock_component_params(cell: &TweedieParams, shock: &TweedieParams) -> Result<(f64, TweedieParams)> {
    if cell.p != shock.p {
        return Err(Error::Domain(format!("powers differ: {} and {}", cell.p, shock.p)));
    }
    if cell.theta == 0.0 {
        return Err(Error::Domain("cell theta is 0; shock coefficient undefined".into()));
    }
    let coef = shock.theta / cell.theta;
    let scaled = tweedie_scale(shock, coef)?;
    Ok((coef, TweedieParams::new(cell.p, cell.theta, scaled.lambda)?))
}

/// CoV ratios of a cell: `u^2 = (lambda_U / lambda_Z)(theta_U / theta_Z)^alpha`,
/// likewise `w` from the within-array shock, and `psi = 1 + u^2 + w^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockRatios {
    pub u: f64,
    pub w: f64,
    pub psi: f64,
}

impl ShockRatios {
    pub fn new(u: f64, w: f64) -> Result<Self> {
        if !(u >= 0.0 && w >= 0.0) {
            return Err(Error::Domain(format!("CoV ratios u = {u}, w = {w} must be >= 0")));
        }
        Ok(Self {
            u,
            w,
            psi: 1.0 + u * u + w * w,
        })
    }

    pub fn from_params(cell: &TweedieParams, u: Option<&TweedieParams>, w: Option<&TweedieParams>) -> Result<Self> {
        let ratio = |s: Option<&TweedieParams>| -> Result<f64> {
            match s {
                None => Ok(0.0),
                Some(s) => {
                    let (_, comp) = shock_component_params(cell, s)?;
                    Ok((comp.lambda / cell.lambda).sqrt())
                }
            }
        };
        Self::new(ratio(u)?, ratio(w)?)
    }
}

/// `(E[Y], Var[Y]) = psi (E[ln Z], Var[ln Z])`.
pub fn log_tweedie_moments(cell: &TweedieParams, ratios: &ShockRatios) -> (f64, f64) {
    let (m, v) = tweedie_mean_var(cell);
    (ratios.psi * m, ratios.psi * v)
}

/// Correlation matrix of `Y` over `n_arrays` arrays of the same cells.
///
/// `subset[k]` is the partition label of cell `k`; `ratios[n][k]` are the ratios of
/// cell `k` in array `n`. Rows and columns are stacked array-major. Two cells in the same
/// subset correlate through `u u'` across arrays and additionally `w w'` within an array.
pub fn log_tweedie_correlation(subset: &[usize], ratios: &[Vec<ShockRatios>]) -> Result<Matrix> {
    let c = subset.len();
    if ratios.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension("one set of ratios per cell and array required".into()));
    }
    let n = ratios.len();
    Ok(Matrix::from_fn(n * c, n * c, |r, s| {
        let (a, k) = (r / c, r % c);
        let (b, l) = (s / c, s % c);
        let (x, y) = (&ratios[a][k], &ratios[b][l]);
        let same_subset = subset[k] == subset[l];
        let mut num = 0.0;
        if same_subset {
            num += x.u * y.u;
            if a == b {
                num += x.w * y.w;
            }
        }
        if a == b && k == l {
            num += 1.0;
        }
        num / (x.psi * y.psi).sqrt()
    }))
}

/// Inputs for a GEE fit: scaled observations `Y / psi`, weights `lambda^(p-1) psi`, and
/// the working correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeeInputs {
    pub y_scaled: Vec<f64>,
    pub weights: Vec<f64>,
    pub correlation: Matrix,
}

pub fn gee_weights(y: &[f64], cells: &[TweedieParams], ratios: &[ShockRatios], correlation: Matrix) -> Result<GeeInputs> {
    if y.len() != cells.len() || y.len() != ratios.len() || correlation.shape() != (y.len(), y.len()) {
        return Err(Error::Dimension("observations, cell parameters, ratios and correlation must conform".into()));
    }
    let y_scaled = y.iter().zip(ratios).map(|(v, r)| v / r.psi).collect();
    let weights = cells
        .iter()
        .zip(ratios)
        .map(|(c, r)| c.lambda.powf(c.p - 1.0) * r.psi)
        .collect();
    Ok(GeeInputs {
        y_scaled,
        weights,
        correlation,
    })
}

/// Distribution of `Y / psi` given `Y ~ Tw*_p(theta, lambda psi)`:
/// `Tw*_p(theta psi, lambda psi^(1 - alpha))`.
pub fn scaled_observation_params(cell: &TweedieParams, ratios: &ShockRatios) -> Result<TweedieParams> {
    let y = TweedieParams::new(cell.p, cell.theta, cell.lambda * ratios.psi)?;
    tweedie_scale(&y, 1.0 / ratios.psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_limit() {
        let t = TweedieParams::new(1.0, 0.3, 2.0).unwrap();
        let (m, v) = tweedie_mean_var(&t);
        assert_relative_eq!(m, 2.0 * 0.3f64.exp(), epsilon = 1e-15);
        assert_eq!(m, v);
        assert!(tweedie_scale(&t, 2.0).is_err());
    }

    #[test]
    fn normal_case() {
        let t = TweedieParams::new(0.0, -1.5, 0.7).unwrap();
        assert_eq!(t.alpha_index, 2.0);
        let (m, v) = tweedie_mean_var(&t);
        assert_relative_eq!(m, 0.7 * -1.5, epsilon = 1e-15);
        assert_relative_eq!(v, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn equal_moments_give_theta_alpha_minus_one() {
        let t = tweedie_from_moments(3.0, 3.0, 1.5).unwrap();
        assert_relative_eq!(t.theta, t.alpha_index - 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.lambda, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn domain_checks() {
        assert!(TweedieParams::new(0.5, 1.0, 1.0).is_err());
        assert!(TweedieParams::new(2.0, 1.0, 1.0).is_err());
        assert!(TweedieParams::new(2.0, -1.0, 1.0).is_ok());
        assert!(TweedieParams::new(-1.0, -1.0, 1.0).is_err());
        assert!(TweedieParams::new(1.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn add_requires_equal_theta() {
        let a = TweedieParams::new(1.5, -1.0, 1.0).unwrap();
        let b = TweedieParams::new(1.5, -2.0, 1.0).unwrap();
        assert!(tweedie_add(&a, &b).is_err());
        let c = tweedie_add(&a, &a).unwrap();
        assert_eq!(c.lambda, 2.0);
    }

    #[test]
    fn unit_ratios_triple_the_moments() {
        let cell = TweedieParams::new(2.0, -0.5, 3.0).unwrap();
        let r = ShockRatios::new(1.0, 1.0).unwrap();
        let (m, v) = tweedie_mean_var(&cell);
        let (my, vy) = log_tweedie_moments(&cell, &r);
        assert_relative_eq!(my, 3.0 * m, epsilon = 1e-14);
        assert_relative_eq!(vy, 3.0 * v, epsilon = 1e-14);
    }

    #[test]
    fn equal_theta_gives_unit_coefficient() {
        let cell = TweedieParams::new(1.5, -0.8, 2.0).unwrap();
        let shock = TweedieParams::new(1.5, -0.8, 0.5).unwrap();
        let (coef, comp) = shock_component_params(&cell, &shock).unwrap();
        assert_eq!(coef, 1.0);
        assert_relative_eq!(comp.lambda, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn no_shocks_gives_unit_gee_weights() {
        let cell = TweedieParams::new(1.5, -1.0, 1.0).unwrap();
        let r = ShockRatios::new(0.0, 0.0).unwrap();
        let g = gee_weights(&[2.5], &[cell], &[r], Matrix::identity(1, 1)).unwrap();
        assert_eq!(g.weights, vec![1.0]);
        assert_eq!(g.y_scaled, vec![2.5]);
    }
}
