//! GLS location estimates and maximum-likelihood dispersion estimates.
//!
//! For fixed `omega`, `kappa_hat = (M^T Sigma^-1 M)^-1 M^T Sigma^-1 y` is computed by
//! whitening with the Cholesky factor of `Sigma`. Dispersion parameters maximise the
//! profile log-likelihood `l(omega) = -1/2 (n ln 2 pi + ln det Sigma + d^T Sigma^-1 d)`,
//! either by Fisher scoring on the profile score or, for two arrays with a cell-wise
//! shock, by the closed form in `r = sigma^2 / v^2`.

use nalgebra::linalg::Cholesky;
use nalgebra::{Dyn, SymmetricEigen};

use crate::covariance::CovarianceModel;
use crate::design::ModelDesign;
use crate::error::{Error, Result};
use crate::kronecker::{symmetrize, trace_of_product, Matrix, Vector};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kappa_hat: Vector,
    /// `(M^T Sigma^-1 M)^-1`.
    pub var_kappa: Matrix,
    pub y_hat: Vector,
    /// `Omega = M Var[kappa_hat] M^T`.
    pub omega_fit: Matrix,
    pub residuals: Vector,
    /// Dispersion estimates, when estimated.
    pub omega_hat: Option<Vec<f64>>,
    pub loglik: f64,
    pub iterations: usize,
}

/// Solver settings for [`ml_dispersion_generic`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlOptions {
    /// Convergence threshold on the max-norm of the projected score.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Vec<f64>,
    /// Components held at their initial value.
    pub fixed: Vec<bool>,
}

impl MlOptions {
    pub fn new(init: Vec<f64>) -> Self {
        let n = init.len();
        Self {
            tol: 1e-9,
            max_iter: 200,
            init,
            fixed: vec![false; n],
        }
    }
}

fn cholesky(sigma: &Matrix) -> Result<Cholesky<f64, Dyn>> {
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::Dimension("Sigma must be square".into()));
    }
    Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite)
}

// columns loading on the weakest direction of the information matrix
fn aliased_columns(design: &ModelDesign, info: &Matrix) -> Vec<String> {
    let eig = SymmetricEigen::new(info.clone());
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let v = eig.eigenvectors.column(k);
    let labels = design.labels();
    v.iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > 1e-3)
        .map(|(i, _)| labels[i].clone())
        .collect()
}

struct Whitened {
    chol: Cholesky<f64, Dyn>,
    fit: FitResult,
}

fn gls_with_factor(y: &Vector, design: &ModelDesign, sigma: &Matrix) -> Result<Whitened> {
    let m = design.m();
    if y.len() != m.nrows() || sigma.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "y has {} entries, M has {} rows, Sigma is {}x{}",
            y.len(),
            m.nrows(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let chol = cholesky(sigma)?;
    let l = chol.l_dirty();
    let wm = l.solve_lower_triangular(m).ok_or(Error::NotPositiveDefinite)?;
    let wy = l.solve_lower_triangular(y).ok_or(Error::NotPositiveDefinite)?;
    let (kappa_hat, mut var_kappa) = if m.ncols() == 0 {
        (Vector::zeros(0), Matrix::zeros(0, 0))
    } else {
        let info = wm.tr_mul(&wm);
        let info_chol = Cholesky::new(info.clone()).ok_or_else(|| Error::Singular(aliased_columns(design, &info)))?;
        (info_chol.solve(&wm.tr_mul(&wy)), info_chol.inverse())
    };
    symmetrize(&mut var_kappa);
    let y_hat = m * &kappa_hat;
    let mut omega_fit = m * &var_kappa * m.transpose();
    symmetrize(&mut omega_fit);
    let residuals = y - &y_hat;
    let wd = l.solve_lower_triangular(&residuals).ok_or(Error::NotPositiveDefinite)?;
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let loglik = -0.5 * (y.len() as f64 * LN_2PI + log_det + wd.norm_squared());
    Ok(Whitened {
        chol,
        fit: FitResult {
            kappa_hat,
            var_kappa,
            y_hat,
            omega_fit,
            residuals,
            omega_hat: None,
            loglik,
            iterations: 0,
        },
    })
}

/// GLS fit for a known `Sigma`.
pub fn gls_fit(y: &Vector, design: &ModelDesign, sigma: &Matrix) -> Result<FitResult> {
    gls_with_factor(y, design, sigma).map(|w| w.fit)
}

struct Evaluation {
    fit: FitResult,
    score: Vector,
    info: Matrix,
}

fn evaluate(y: &Vector, design: &ModelDesign, model: &CovarianceModel, omega: &[f64], with_info: bool) -> Result<Evaluation> {
    let sigma = model.sigma(omega)?;
    let w = gls_with_factor(y, design, &sigma)?;
    let a = w.chol.solve(&w.fit.residuals);
    let sinv = w.chol.inverse();
    let k = model.n_params();
    let mut score = Vector::zeros(k);
    let mut products = Vec::with_capacity(if with_info { k } else { 0 });
    for i in 0..k {
        let d = model.dsigma(i)?;
        let tr = trace_of_product(&sinv, d);
        score[i] = -0.5 * tr + 0.5 * a.dot(&(d * &a));
        if with_info {
            products.push(&sinv * d);
        }
    }
    let mut info = Matrix::zeros(k, k);
    if with_info {
        for i in 0..k {
            for j in i..k {
                let v = 0.5 * trace_of_product(&products[i], &products[j]);
                info[(i, j)] = v;
                info[(j, i)] = v;
            }
        }
    }
    Ok(Evaluation {
        fit: w.fit,
        score,
        info,
    })
}

/// Profile score `dl/domega_k = -1/2 tr(Sigma^-1 D_k) + 1/2 a^T D_k a`, `a = Sigma^-1 d`,
/// with `d` the GLS residual at `omega`.
pub fn profile_score(y: &Vector, design: &ModelDesign, model: &CovarianceModel, omega: &[f64]) -> Result<Vector> {
    evaluate(y, design, model, omega, false).map(|e| e.score)
}

/// Profile log-likelihood at `omega`.
pub fn profile_loglik(y: &Vector, design: &ModelDesign, model: &CovarianceModel, omega: &[f64]) -> Result<f64> {
    let sigma = model.sigma(omega)?;
    Ok(gls_fit(y, design, &sigma)?.loglik)
}

fn projected(score: &Vector, omega: &[f64], fixed: &[bool]) -> Vector {
    Vector::from_fn(score.len(), |k, _| {
        if fixed[k] || (omega[k] == 0.0 && score[k] <= 0.0) {
            0.0
        } else {
            score[k]
        }
    })
}

/// Maximum-likelihood dispersion by Fisher scoring with step halving.
///
/// Components are kept `>= 0`; a component sitting at 0 with a non-positive score is
/// treated as an active bound and excluded from the step.
pub fn ml_dispersion_generic(y: &Vector, design: &ModelDesign, model: &CovarianceModel, opts: &MlOptions) -> Result<FitResult> {
    let k = model.n_params();
    if opts.init.len() != k || opts.fixed.len() != k {
        return Err(Error::Dimension(format!(
            "structure has {k} components; init has {}, fixed flags {}",
            opts.init.len(),
            opts.fixed.len()
        )));
    }
    for (i, &w) in opts.init.iter().enumerate() {
        if !(w.is_finite() && (w > 0.0 || (opts.fixed[i] && w >= 0.0))) {
            return Err(Error::InvalidParameter(format!(
                "initial value {w} for {} must be > 0",
                model.names()[i]
            )));
        }
    }
    let mut omega = opts.init.clone();
    let mut cur = evaluate(y, design, model, &omega, true)?;
    for iter in 0..=opts.max_iter {
        let proj = projected(&cur.score, &omega, &opts.fixed);
        let norm = proj.amax();
        if norm < opts.tol {
            let mut fit = cur.fit;
            fit.omega_hat = Some(omega);
            fit.iterations = iter;
            return Ok(fit);
        }
        if iter == opts.max_iter {
            break;
        }
        let free: Vec<usize> = (0..k).filter(|&i| proj[i] != 0.0 || (!opts.fixed[i] && omega[i] > 0.0)).collect();
        let sub_info = Matrix::from_fn(free.len(), free.len(), |a, b| cur.info[(free[a], free[b])]);
        let sub_score = Vector::from_fn(free.len(), |a, _| cur.score[free[a]]);
        let dir = match Cholesky::new(sub_info.clone()) {
            Some(c) => c.solve(&sub_score),
            None => Vector::from_fn(free.len(), |a, _| sub_score[a] / sub_info[(a, a)].max(f64::MIN_POSITIVE)),
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = omega.clone();
            for (a, &i) in free.iter().enumerate() {
                trial[i] = (omega[i] + step * dir[a]).max(0.0);
            }
            if let Ok(e) = evaluate(y, design, model, &trial, true) {
                if e.fit.loglik >= cur.fit.loglik - 1e-12 * cur.fit.loglik.abs().max(1.0) {
                    accepted = Some((trial, e));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, e)) => {
                let unchanged = trial == omega;
                omega = trial;
                cur = e;
                if unchanged {
                    break;
                }
            }
            None => break,
        }
    }
    let proj = projected(&cur.score, &omega, &opts.fixed);
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        score_norm: proj.amax(),
        omega,
    })
}

/// Closed-form ML for two arrays with cell-wise dependence, from fixed residuals.
///
/// `r` is the positive root of
/// `2|d1-d2|^2 r^2 - (|d1+d2|^2 - 2|d1-d2|^2) r - 2<d1,d2> = 0`, then
/// `v^2 = |d1+d2|^2 / (2 n (2r + 1))` and `sigma^2 = r v^2`. Without a positive root
/// the estimate sits on the boundary `sigma^2 = 0`.
///
/// Returns `(sigma2, v2, r)`.
pub fn ml_dispersion_cellwise_closed_form(d1: &[f64], d2: &[f64]) -> Result<(f64, f64, f64)> {
    if d1.len() != d2.len() || d1.is_empty() {
        return Err(Error::Dimension(format!(
            "residual vectors have lengths {} and {}",
            d1.len(),
            d2.len()
        )));
    }
    let n = d1.len() as f64;
    let (mut sum2, mut diff2, mut inner, mut n1, mut n2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b) in d1.iter().zip(d2) {
        sum2 += (a + b) * (a + b);
        diff2 += (a - b) * (a - b);
        inner += a * b;
        n1 += a * a;
        n2 += b * b;
    }
    // equal up to rounding: v^2 would be 0
    if diff2 <= 1e-24 * (n1 + n2) {
        return Err(Error::DegenerateResiduals);
    }
    let qa = 2.0 * diff2;
    let qb = -(sum2 - 2.0 * diff2);
    let qc = -2.0 * inner;
    let disc = qb * qb - 4.0 * qa * qc;
    let mut roots: Vec<f64> = Vec::new();
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // numerically stable pair
        let q = -0.5 * (qb + qb.signum() * sq);
        if q != 0.0 {
            roots.push(q / qa);
            roots.push(qc / q);
        } else {
            roots.push(-qb / (2.0 * qa));
        }
    }
    let loglik = |s2: f64, v2: f64| {
        let l1 = 2.0 * s2 + v2;
        -0.5 * (n * (l1.ln() + v2.ln()) + sum2 / (2.0 * l1) + diff2 / (2.0 * v2))
    };
    let best = roots
        .into_iter()
        .filter(|r| *r > 0.0 && r.is_finite())
        .map(|r| {
            let v2 = sum2 / (2.0 * n * (2.0 * r + 1.0));
            (r * v2, v2, r)
        })
        .max_by(|a, b| loglik(a.0, a.1).total_cmp(&loglik(b.0, b.1)));
    Ok(best.unwrap_or((0.0, (n1 + n2) / (2.0 * n), 0.0)))
}

/// Alternates GLS and the closed form until `omega` changes by less than `1e-10`
/// relative. The design must describe two arrays and the structure must be
/// `sigma^2 (1 1^T) ⊗ I + v^2 I`.
pub fn fit_cellwise_closed_form(y: &Vector, design: &ModelDesign, max_iter: usize) -> Result<FitResult> {
    let layout = design.layout();
    if layout.n_arrays() != 2 {
        return Err(Error::InvalidParameter(format!(
            "the closed form needs exactly two arrays, got {}",
            layout.n_arrays()
        )));
    }
    let model = crate::covariance::GammaStructure::CellWiseTwoLevel {
        n_arrays: 2,
        n_cells: layout.n_cells(),
    }
    .model();
    let a = layout.n_cells();
    let mut omega = [0.0, 1.0];
    for iter in 1..=max_iter {
        let mut fit = gls_fit(y, design, &model.sigma(&omega)?)?;
        let d = fit.residuals.as_slice();
        let (s2, v2, _) = ml_dispersion_cellwise_closed_form(&d[..a], &d[a..])?;
        let next = [s2, v2];
        let change = next
            .iter()
            .zip(&omega)
            .map(|(n, o)| (n - o).abs() / n.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        omega = next;
        if change < 1e-10 {
            fit = gls_fit(y, design, &model.sigma(&omega)?)?;
            fit.omega_hat = Some(omega.to_vec());
            fit.iterations = iter;
            return Ok(fit);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        score_norm: f64::NAN,
        omega: omega.to_vec(),
    })
}

/// Pearson correlation and the number of positions where the signs agree.
///
/// Entries with magnitude at most `1e-10` times the largest magnitude count as zero,
/// and a zero agrees only with a zero.
pub fn dependence_stats(d1: &[f64], d2: &[f64]) -> Result<(f64, usize)> {
    if d1.len() != d2.len() || d1.is_empty() {
        return Err(Error::Dimension(format!(
            "residual vectors have lengths {} and {}",
            d1.len(),
            d2.len()
        )));
    }
    let n = d1.len() as f64;
    let mean = |d: &[f64]| d.iter().sum::<f64>() / n;
    let (m1, m2) = (mean(d1), mean(d2));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in d1.iter().zip(d2) {
        sxy += (a - m1) * (b - m2);
        sxx += (a - m1) * (a - m1);
        syy += (b - m2) * (b - m2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance("residual vector is constant".into()));
    }
    let sign = |d: &[f64]| {
        let eps = 1e-10 * d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d.iter()
            .map(|&v| if v.abs() <= eps { 0 } else if v > 0.0 { 1 } else { -1 })
            .collect::<Vec<i8>>()
    };
    let agree = sign(d1).iter().zip(sign(d2)).filter(|(a, b)| **a == *b).count();
    Ok((sxy / (sxx * syy).sqrt(), agree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayLayout;
    use crate::design::{ColumnKey, DesignColumns};
    use crate::kronecker::identity;
    use approx::assert_relative_eq;

    fn saturated(n: usize) -> ModelDesign {
        let layout = ArrayLayout::rectangle(1, 1, n).unwrap();
        let cols = DesignColumns::new(identity(n), (0..n).map(ColumnKey::Extra).collect()).unwrap();
        ModelDesign::from_columns(layout, cols).unwrap()
    }

    #[test]
    fn saturated_model_reproduces_data() {
        let d = saturated(4);
        let y = Vector::from_row_slice(&[1.0, -2.0, 0.5, 3.0]);
        let fit = gls_fit(&y, &d, &identity(4)).unwrap();
        assert_relative_eq!(fit.kappa_hat, y, epsilon = 1e-12);
        assert_relative_eq!(fit.omega_fit, identity(4), epsilon = 1e-12);
        assert!(fit.residuals.amax() < 1e-12);
    }

    #[test]
    fn scalar_sigma_gives_ols() {
        let layout = ArrayLayout::rectangle(1, 1, 5).unwrap();
        let m = Matrix::from_row_slice(5, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        let d = ModelDesign::from_columns(layout, DesignColumns::new(m.clone(), vec![ColumnKey::Extra(0), ColumnKey::Extra(1)]).unwrap())
            .unwrap();
        let y = Vector::from_row_slice(&[0.1, 1.2, 1.9, 3.2, 3.9]);
        let ols = (m.transpose() * &m).try_inverse().unwrap() * m.transpose() * &y;
        for c in [0.01, 1.0, 250.0] {
            let fit = gls_fit(&y, &d, &(identity(5) * c)).unwrap();
            assert_relative_eq!(fit.kappa_hat, ols, epsilon = 1e-10);
        }
    }

    #[test]
    fn single_observation_variance_score() {
        let d = ModelDesign::without_location(ArrayLayout::rectangle(1, 1, 1).unwrap());
        let y = Vector::from_row_slice(&[1.5]);
        let model = CovarianceModel::from_basis(vec!["w".into()], vec![identity(1)]).unwrap();
        let s = profile_score(&y, &d, &model, &[2.25]).unwrap();
        assert!(s[0].abs() < 1e-15);
        let s = profile_score(&y, &d, &model, &[1.0]).unwrap();
        assert!(s[0] > 0.0);
        let fit = ml_dispersion_generic(&y, &d, &model, &MlOptions::new(vec![1.0])).unwrap();
        assert_relative_eq!(fit.omega_hat.unwrap()[0], 2.25, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_orthogonal_residuals() {
        let d1 = [1.0, 0.0, -1.0, 0.0];
        let d2 = [0.0, 1.0, 0.0, -1.0];
        let (s2, v2, r) = ml_dispersion_cellwise_closed_form(&d1, &d2).unwrap();
        assert_eq!((s2, r), (0.0, 0.0));
        assert_relative_eq!(v2, 4.0 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_matches_eigen_solution() {
        let d1 = [0.3, -0.1, 0.25, -0.4, 0.05];
        let d2 = [0.2, -0.05, 0.1, -0.3, -0.1];
        let (s2, v2, r) = ml_dispersion_cellwise_closed_form(&d1, &d2).unwrap();
        let n = 5.0;
        let diff2: f64 = d1.iter().zip(&d2).map(|(a, b)| (a - b) * (a - b)).sum();
        let inner: f64 = d1.iter().zip(&d2).map(|(a, b)| a * b).sum();
        assert_relative_eq!(v2, diff2 / (2.0 * n), epsilon = 1e-14);
        assert_relative_eq!(s2, inner / n, epsilon = 1e-14);
        assert_relative_eq!(r, s2 / v2, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_is_permutation_invariant() {
        let d1 = [0.3, -0.1, 0.25, -0.4, 0.05];
        let d2 = [0.2, -0.05, 0.1, -0.3, -0.1];
        let p = [3, 0, 4, 1, 2];
        let e1: Vec<f64> = p.iter().map(|&i| d1[i]).collect();
        let e2: Vec<f64> = p.iter().map(|&i| d2[i]).collect();
        let a = ml_dispersion_cellwise_closed_form(&d1, &d2).unwrap();
        let b = ml_dispersion_cellwise_closed_form(&e1, &e2).unwrap();
        assert_relative_eq!(a.0, b.0, epsilon = 1e-15);
        assert_relative_eq!(a.1, b.1, epsilon = 1e-15);
    }

    #[test]
    fn identical_residuals_rejected() {
        let d = [0.1, -0.2];
        assert!(matches!(ml_dispersion_cellwise_closed_form(&d, &d), Err(Error::DegenerateResiduals)));
    }

    #[test]
    fn dependence_stats_extremes() {
        let d1 = [0.5, -1.0, 2.0, -0.25];
        let (c, a) = dependence_stats(&d1, &d1).unwrap();
        assert_relative_eq!(c, 1.0, epsilon = 1e-15);
        assert_eq!(a, 4);
        let neg: Vec<f64> = d1.iter().map(|v| -v).collect();
        let (c, a) = dependence_stats(&d1, &neg).unwrap();
        assert_relative_eq!(c, -1.0, epsilon = 1e-15);
        assert_eq!(a, 0);
        assert!(matches!(dependence_stats(&d1, &[1.0; 4]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn non_pd_sigma_rejected() {
        let d = saturated(2);
        let y = Vector::from_row_slice(&[1.0, 2.0]);
        let s = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(gls_fit(&y, &d, &s), Err(Error::NotPositiveDefinite)));
    }
}
