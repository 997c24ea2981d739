use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("claim value {value} at array {array}, cell ({row}, {col}) is not strictly positive")]
    NonPositiveValue {
        array: usize,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown {what} '{value}'; expected one of: {expected}")]
    UnknownName {
        what: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("design has no estimable columns")]
    EmptyDesign,

    #[error("information matrix is singular; aliased columns: {}", .0.join(", "))]
    Singular(Vec<String>),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown dispersion component index {0}")]
    UnknownComponent(usize),

    #[error(
        "ML dispersion search did not converge after {iterations} iterations \
         (score max-norm {score_norm:e}, last omega {omega:?})"
    )]
    NoConvergence {
        iterations: usize,
        score_norm: f64,
        omega: Vec<f64>,
    },

    #[error("residual vectors are identical; perfectly correlated residuals leave v^2 = 0")]
    DegenerateResiduals,

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("log-scale exponent {exponent} at component {index} exceeds the overflow guard")]
    Overflow { index: usize, exponent: f64 },

    #[error("forecast cell ({row}, {col}) of array {array} is not estimable: {reason}")]
    Unestimable {
        array: usize,
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("Tweedie parameter outside its domain: {0}")]
    Domain(String),
}
