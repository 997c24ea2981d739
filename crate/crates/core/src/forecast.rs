//! Forecasts of future cells and loss reserves.
//!
//! With `M*` the design rows of the forecast region,
//! `Y_hat* = M* kappa_hat + offsets` and
//! `Omega* = M* Var[kappa_hat] M*^T + Sigma*`, where `Sigma*` is the process covariance
//! of the future cells under the fitted structure. Cross-covariance between observed and
//! future cells is ignored. Raw-scale forecasts and their covariance follow from the
//! log-normal moment maps, and reserves are sums over each array's forecast cells.

use crate::array::{unstack, ArrayLayout, Cell, CellTable};
use crate::covariance::{GammaStructure, StructureKind};
use crate::design::{CalendarOffsets, ModelDesign};
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::kronecker::{symmetrize, Matrix, Vector};
use crate::lognormal::LogNormalSummary;

/// Design rows, offsets and process covariance for a forecast region.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDesign {
    pub layout: ArrayLayout,
    pub m_star: Matrix,
    pub offsets: Vector,
    pub sigma_star: Matrix,
}

/// Builds `M*` and `Sigma*` over `cells` for every array of `design`.
pub fn build_forecast_design(
    design: &ModelDesign,
    kind: StructureKind,
    omega: &[f64],
    cells: &[Cell],
    offsets: Option<&CalendarOffsets>,
) -> Result<ForecastDesign> {
    let base = design.layout();
    let layout = ArrayLayout::with_order(base.n_arrays(), base.n_rows(), base.n_cols(), cells.to_vec())?;
    let (m_star, offsets, offset_var) = design.forecast_rows(cells, offsets)?;
    let structure = GammaStructure::for_cells(kind, design, cells)?;
    let mut sigma_star = structure.model().sigma(omega)?;
    for (k, v) in offset_var.iter().enumerate() {
        sigma_star[(k, k)] += v;
    }
    Ok(ForecastDesign {
        layout,
        m_star,
        offsets,
        sigma_star,
    })
}

/// Mean, standard error and coefficient of variation of a reserve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reserve {
    pub mean: f64,
    pub se: f64,
    pub cov: f64,
}

impl Reserve {
    fn new(mean: f64, variance: f64) -> Self {
        let se = variance.max(0.0).sqrt();
        let cov = if mean == 0.0 { 0.0 } else { se / mean };
        Self { mean, se, cov }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub layout: ArrayLayout,
    pub y_star: Vector,
    pub omega_star: Matrix,
    pub x_star: Vector,
    pub xi_star: Matrix,
    pub reserves: Vec<Reserve>,
    pub total: Reserve,
}

/// Forecast cells, predictive covariance and reserves.
pub fn predict(fit: &FitResult, fd: &ForecastDesign) -> Result<ForecastResult> {
    if fd.m_star.ncols() != fit.kappa_hat.len() {
        return Err(Error::Dimension(format!(
            "forecast design has {} columns but kappa has {} entries",
            fd.m_star.ncols(),
            fit.kappa_hat.len()
        )));
    }
    let y_star = &fd.m_star * &fit.kappa_hat + &fd.offsets;
    let mut omega_star = &fd.m_star * &fit.var_kappa * fd.m_star.transpose() + &fd.sigma_star;
    symmetrize(&mut omega_star);
    let summary = LogNormalSummary::new(y_star.clone(), omega_star.clone())?;
    let x_star = summary.raw_means()?;
    let xi_star = summary.raw_covariance()?;
    let c = fd.layout.n_cells();
    let reserves: Vec<Reserve> = (0..fd.layout.n_arrays())
        .map(|n| Reserve::new(x_star.rows(n * c, c).sum(), xi_star.view((n * c, n * c), (c, c)).sum()))
        .collect();
    let total = Reserve::new(x_star.sum(), xi_star.sum());
    Ok(ForecastResult {
        layout: fd.layout.clone(),
        y_star,
        omega_star,
        x_star,
        xi_star,
        reserves,
        total,
    })
}

impl ForecastResult {
    pub fn n_arrays(&self) -> usize {
        self.layout.n_arrays()
    }

    /// Forecast cells by array and cell.
    pub fn x_table(&self) -> Result<CellTable> {
        unstack(&self.x_star, &self.layout)
    }

    /// `Cov[R^(n), R^(m)]`, the sum of block `(n, m)` of `Xi*` (0-based arrays).
    pub fn reserve_covariance(&self, n: usize, m: usize) -> f64 {
        let c = self.layout.n_cells();
        self.xi_star.view((n * c, m * c), (c, c)).sum()
    }

    /// Correlation between the two arrays' reserves.
    pub fn reserve_correlation(&self) -> Result<f64> {
        if self.n_arrays() != 2 {
            return Err(Error::InvalidParameter(format!(
                "reserve correlation needs two arrays, got {}",
                self.n_arrays()
            )));
        }
        let (s1, s2) = (self.reserves[0].se, self.reserves[1].se);
        if s1 == 0.0 || s2 == 0.0 {
            return Err(Error::ZeroVariance("a reserve has zero standard error".into()));
        }
        Ok(self.reserve_covariance(0, 1) / (s1 * s2))
    }

    /// Total reserve with the cross-array blocks of `Xi*` set to zero.
    pub fn independence_counterfactual(&self) -> Reserve {
        let var = (0..self.n_arrays()).map(|n| self.reserve_covariance(n, n)).sum();
        Reserve::new(self.total.mean, var)
    }
}

/// Future calendar effects `gamma_t = gamma_bar + rho (gamma_{t-1} - gamma_bar) + eps_t`
/// starting from the last estimated `gamma_tmax`. Without `noise` every `eps_t` is 0.
pub fn gamma_ar1(gamma_tmax: f64, gamma_bar: f64, rho: f64, horizon: usize, noise: Option<&[f64]>) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("AR(1) horizon must be >= 1".into()));
    }
    if let Some(e) = noise {
        if e.len() != horizon {
            return Err(Error::Dimension(format!("{} noise terms for horizon {horizon}", e.len())));
        }
    }
    let mut prev = gamma_tmax;
    Ok((0..horizon)
        .map(|h| {
            prev = gamma_bar + rho * (prev - gamma_bar) + noise.map_or(0.0, |e| e[h]);
            prev
        })
        .collect())
}
