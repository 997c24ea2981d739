//! Multiplicative common-shock log-normal models for collections of claim arrays.
//!
//! A collection of `N` congruent claim arrays is modelled on the log scale as
//!
//! ```text
//! Y = A ln U + B ln W + ln Z,     Y ~ N(M kappa, Sigma(omega)),   Sigma = L Gamma(omega) L^T
//! ```
//!
//! where `U` is a shock shared across arrays, `W` a shock shared within an array and
//! `Z` the idiosyncratic part carrying a chain-ladder or Hoerl development structure.
//! Location parameters are estimated by generalized least squares, dispersion
//! parameters by maximum likelihood (generic profile-score solver, plus a closed form
//! for two arrays with cell-wise dependence), and loss reserves are forecast with a
//! full predictive covariance on the raw scale.
//!
//! Module map:
//!
//! * [`array`]: claim arrays, masks, stacking order and forecast regions.
//! * [`kronecker`]: dense Kronecker products and helpers.
//! * [`partition`]: shock partitions (array, cell, row, column, diagonal).
//! * [`design`]: design matrices `A`, `B`, `C`, `M`, `L` and identifiability reduction.
//! * [`covariance`]: parametric `Gamma(omega)`, `Sigma`, derivatives and closed-form inverses.
//! * [`estimation`]: GLS, profile score, ML dispersion estimation, residual diagnostics.
//! * [`lognormal`]: multivariate log-normal moment maps.
//! * [`forecast`]: forecast design, predictive covariance and reserves.
//! * [`tweedie`]: Tweedie algebra and log-Tweedie moment/correlation structure.
//! * [`simulate`]: synthetic claim collections and the balance diagnostic.

pub mod array;
pub mod covariance;
pub mod design;
pub mod error;
pub mod estimation;
pub mod forecast;
pub mod kronecker;
pub mod lognormal;
pub mod partition;
pub mod simulate;
pub mod tweedie;

pub use array::{diagonal_of, future_cells, ArrayLayout, Cell, CellTable, ClaimCollection};
pub use covariance::{CovarianceModel, GammaStructure, StructureKind};
pub use design::{CalendarOffsets, Coefficients, ColumnKey, DesignBuilder, DevelopmentForm, ModelDesign, ShockMean, ShockSpec};
pub use error::{Error, Result};
pub use estimation::{FitResult, MlOptions};
pub use forecast::{ForecastDesign, ForecastResult, Reserve};
pub use kronecker::{Matrix, Vector};
pub use lognormal::LogNormalSummary;
pub use partition::{Partition, PartitionKind, SubsetKey};
pub use simulate::{Rounding, SimSpec};
pub use tweedie::{ShockRatios, TweedieParams};
