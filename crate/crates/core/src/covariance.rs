//! Parametric covariance structures `Gamma(omega)` and `Sigma = L Gamma L^T`.
//!
//! Every structure here is linear in `omega`, so `Sigma(omega) = sum_k omega_k D_k`
//! and the derivative `dSigma/domega_k` is the fixed basis matrix `D_k`.

use std::fmt;
use std::str::FromStr;

use crate::array::{ArrayLayout, Cell};
use crate::design::{build_a, build_b, ModelDesign};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::kronecker::{block_diag, hcat, identity, kron, ones_matrix, ones_vector, symmetrize, unit_projector, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    DiagonalScalar,
    Example48,
    CellWiseTwoLevel,
}

impl StructureKind {
    pub const NAMES: &'static str = "diagonal_scalar, example48, cellwise_two_level";

    pub fn name(self) -> &'static str {
        match self {
            Self::DiagonalScalar => "diagonal_scalar",
            Self::Example48 => "example48",
            Self::CellWiseTwoLevel => "cellwise_two_level",
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "diagonal_scalar" => Ok(Self::DiagonalScalar),
            "example48" => Ok(Self::Example48),
            "cellwise_two_level" => Ok(Self::CellWiseTwoLevel),
            other => Err(Error::UnknownName {
                what: "covariance structure",
                value: other.to_string(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// Shape of `Gamma`, without the variance components themselves.
///
/// Component order of `omega`:
/// - `DiagonalScalar`: `(sigma^2, [tau^2], v^2)`, `tau^2` present only with a `B` block
/// - `Example48`: `(sigma^2, tau_1^2..tau_N^2, v_1^2..v_N^2)`
/// - `CellWiseTwoLevel`: `(sigma^2, v^2)`
#[derive(Debug, Clone, PartialEq)]
pub enum GammaStructure {
    DiagonalScalar { a: Matrix, b: Option<Matrix> },
    Example48 { n_arrays: usize, a0: Matrix, r: Matrix },
    CellWiseTwoLevel { n_arrays: usize, n_cells: usize },
}

impl GammaStructure {
    /// Structure of the requested kind matching the shock blocks of `design`.
    pub fn for_design(kind: StructureKind, design: &ModelDesign) -> Result<Self> {
        let layout = design.layout();
        Self::from_blocks(kind, layout.n_arrays(), layout.n_cells(), design.a(), design.b())
    }

    /// The same structure over another set of cells, for example a forecast region.
    /// Shock subsets are formed from `cells` alone.
    pub fn for_cells(kind: StructureKind, design: &ModelDesign, cells: &[Cell]) -> Result<Self> {
        let builder = design.builder().ok_or_else(|| {
            Error::InvalidParameter("design was not built from rules; cannot extend the structure".into())
        })?;
        let base = design.layout();
        let layout = ArrayLayout::with_order(base.n_arrays(), base.n_rows(), base.n_cols(), cells.to_vec())?;
        let shocks = &builder.shocks;
        let part = Partition::build(shocks.partition, cells);
        let rows = layout.stacked_len();
        let a = if shocks.include_u {
            build_a(&part, &layout, &shocks.alpha)
        } else {
            Matrix::zeros(rows, 0)
        };
        let b = if shocks.include_w {
            build_b(&part, &layout, &shocks.beta)
        } else {
            Matrix::zeros(rows, 0)
        };
        Self::from_blocks(kind, layout.n_arrays(), cells.len(), &a, &b)
    }

    /// Structure from shock loadings `A` (`N cells x P`) and `B` (`N cells x N P`).
    pub fn from_blocks(kind: StructureKind, n: usize, cells: usize, a: &Matrix, b: &Matrix) -> Result<Self> {
        match kind {
            StructureKind::DiagonalScalar => Ok(Self::DiagonalScalar {
                a: a.clone(),
                b: (b.ncols() > 0).then(|| b.clone()),
            }),
            StructureKind::Example48 => {
                if a.ncols() == 0 {
                    return Err(Error::InvalidParameter(
                        "example48 needs an across-array shock in the design".into(),
                    ));
                }
                let a0 = a.rows(0, cells).into_owned();
                if kron(&ones_vector(n), &a0) != *a {
                    return Err(Error::InvalidParameter(
                        "example48 needs shock coefficients that do not vary by array".into(),
                    ));
                }
                if b.ncols() > 0 && kron(&identity(n), &a0) != *b {
                    return Err(Error::InvalidParameter(
                        "example48 needs the within-array shock loaded like the across-array shock".into(),
                    ));
                }
                let p = a0.ncols();
                Ok(Self::Example48 {
                    n_arrays: n,
                    a0,
                    r: identity(p),
                })
            }
            StructureKind::CellWiseTwoLevel => {
                if *a != kron(&ones_vector(n), &identity(cells)) || b.ncols() > 0 {
                    return Err(Error::InvalidParameter(
                        "cellwise_two_level needs a single cell-wise across-array shock with unit coefficients".into(),
                    ));
                }
                Ok(Self::CellWiseTwoLevel { n_arrays: n, n_cells: cells })
            }
        }
    }

    pub fn kind(&self) -> StructureKind {
        match self {
            Self::DiagonalScalar { .. } => StructureKind::DiagonalScalar,
            Self::Example48 { .. } => StructureKind::Example48,
            Self::CellWiseTwoLevel { .. } => StructureKind::CellWiseTwoLevel,
        }
    }

    /// Side length of `Sigma`.
    pub fn dim(&self) -> usize {
        match self {
            Self::DiagonalScalar { a, .. } => a.nrows(),
            Self::Example48 { n_arrays, a0, .. } => n_arrays * a0.nrows(),
            Self::CellWiseTwoLevel { n_arrays, n_cells } => n_arrays * n_cells,
        }
    }

    pub fn component_names(&self) -> Vec<String> {
        match self {
            Self::DiagonalScalar { b, .. } => {
                let mut v = vec!["sigma2".to_string()];
                if b.is_some() {
                    v.push("tau2".to_string());
                }
                v.push("v2".to_string());
                v
            }
            Self::Example48 { n_arrays, .. } => std::iter::once("sigma2".to_string())
                .chain((1..=*n_arrays).map(|n| format!("tau2[{n}]")))
                .chain((1..=*n_arrays).map(|n| format!("v2[{n}]")))
                .collect(),
            Self::CellWiseTwoLevel { .. } => vec!["sigma2".to_string(), "v2".to_string()],
        }
    }

    pub fn n_params(&self) -> usize {
        self.component_names().len()
    }

    /// Loading matrix `L`.
    pub fn l_matrix(&self) -> Matrix {
        let eye = identity(self.dim());
        match self {
            Self::DiagonalScalar { a, b } => match b {
                Some(b) => hcat(&[a, b, &eye]),
                None => hcat(&[a, &eye]),
            },
            Self::Example48 { n_arrays, a0, .. } => {
                let u = kron(&ones_vector(*n_arrays), a0);
                let w = kron(&identity(*n_arrays), a0);
                hcat(&[&u, &w, &eye])
            }
            Self::CellWiseTwoLevel { n_arrays, n_cells } => {
                let u = kron(&ones_vector(*n_arrays), &identity(*n_cells));
                hcat(&[&u, &eye])
            }
        }
    }

    /// `Gamma(omega)`, block-diagonal over the shock and idiosyncratic components.
    pub fn gamma(&self, omega: &[f64]) -> Result<Matrix> {
        self.check_omega(omega)?;
        Ok(match self {
            Self::DiagonalScalar { a, b } => {
                let mut blocks = vec![identity(a.ncols()) * omega[0]];
                let mut k = 1;
                if let Some(b) = b {
                    blocks.push(identity(b.ncols()) * omega[1]);
                    k = 2;
                }
                blocks.push(identity(a.nrows()) * omega[k]);
                block_diag(&blocks)
            }
            Self::Example48 { n_arrays, r, a0 } => {
                let n = *n_arrays;
                let phi = Matrix::from_diagonal(&crate::kronecker::Vector::from_row_slice(&omega[1..=n]));
                let psi = Matrix::from_diagonal(&crate::kronecker::Vector::from_row_slice(&omega[n + 1..]));
                block_diag(&[r * omega[0], kron(&phi, r), kron(&psi, &identity(a0.nrows()))])
            }
            Self::CellWiseTwoLevel { n_arrays, n_cells } => block_diag(&[
                identity(*n_cells) * omega[0],
                identity(n_arrays * n_cells) * omega[1],
            ]),
        })
    }

    /// Analytic basis `D_k = dSigma/domega_k`.
    pub fn model(&self) -> CovarianceModel {
        let basis = match self {
            Self::DiagonalScalar { a, b } => {
                let mut v = vec![a * a.transpose()];
                if let Some(b) = b {
                    v.push(b * b.transpose());
                }
                v.push(identity(a.nrows()));
                v
            }
            Self::Example48 { n_arrays, a0, r } => {
                let n = *n_arrays;
                let k = a0 * r * a0.transpose();
                let cells = identity(a0.nrows());
                let mut v = vec![kron(&ones_matrix(n), &k)];
                v.extend((0..n).map(|i| kron(&unit_projector(n, i), &k)));
                v.extend((0..n).map(|i| kron(&unit_projector(n, i), &cells)));
                v
            }
            Self::CellWiseTwoLevel { n_arrays, n_cells } => vec![
                kron(&ones_matrix(*n_arrays), &identity(*n_cells)),
                identity(n_arrays * n_cells),
            ],
        };
        CovarianceModel {
            names: self.component_names(),
            basis,
        }
    }

    fn check_omega(&self, omega: &[f64]) -> Result<()> {
        check_components(omega, self.n_params())
    }
}

fn check_components(omega: &[f64], expected: usize) -> Result<()> {
    if omega.len() != expected {
        return Err(Error::Dimension(format!(
            "expected {expected} variance components, got {}",
            omega.len()
        )));
    }
    if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("variance component {w} must be finite and >= 0")));
    }
    Ok(())
}

/// `Sigma(omega) = sum_k omega_k D_k` with its derivative basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    names: Vec<String>,
    basis: Vec<Matrix>,
}

impl CovarianceModel {
    /// A model from an explicit basis; every `D_k` must be square and symmetric.
    pub fn from_basis(names: Vec<String>, basis: Vec<Matrix>) -> Result<Self> {
        if names.len() != basis.len() || basis.is_empty() {
            return Err(Error::Dimension("one name per basis matrix required".into()));
        }
        let n = basis[0].nrows();
        if basis.iter().any(|d| d.shape() != (n, n)) {
            return Err(Error::Dimension("basis matrices must be square and equal in size".into()));
        }
        Ok(Self { names, basis })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_params(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.basis[0].nrows()
    }

    pub fn sigma(&self, omega: &[f64]) -> Result<Matrix> {
        check_components(omega, self.n_params())?;
        let mut s = Matrix::zeros(self.dim(), self.dim());
        for (w, d) in omega.iter().zip(&self.basis) {
            if *w != 0.0 {
                s += d * *w;
            }
        }
        symmetrize(&mut s);
        Ok(s)
    }

    /// `dSigma/domega_k`.
    pub fn dsigma(&self, k: usize) -> Result<&Matrix> {
        self.basis.get(k).ok_or(Error::UnknownComponent(k))
    }
}

/// `Sigma = L Gamma L^T`, symmetrized.
pub fn sigma_from_gamma(l: &Matrix, gamma: &Matrix) -> Result<Matrix> {
    if gamma.nrows() != gamma.ncols() || l.ncols() != gamma.nrows() {
        return Err(Error::Dimension(format!(
            "L is {}x{} but Gamma is {}x{}",
            l.nrows(),
            l.ncols(),
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let mut s = l * gamma * l.transpose();
    symmetrize(&mut s);
    Ok(s)
}

/// `(sigma^2 1 1^T + Phi) ⊗ (A0 R A0^T) + Psi ⊗ I`, `Phi = diag(tau2)`, `Psi = diag(v2)`.
pub fn sigma_example48(sigma2: f64, tau2: &[f64], v2: &[f64], a0: &Matrix, r: &Matrix) -> Result<Matrix> {
    let n = tau2.len();
    if v2.len() != n || r.nrows() != r.ncols() || a0.ncols() != r.nrows() {
        return Err(Error::Dimension(format!(
            "tau2 has {} entries, v2 {}, A0 is {}x{}, R is {}x{}",
            n,
            v2.len(),
            a0.nrows(),
            a0.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let phi = Matrix::from_fn(n, n, |i, j| if i == j { tau2[i] } else { 0.0 });
    let psi = Matrix::from_fn(n, n, |i, j| if i == j { v2[i] } else { 0.0 });
    let k = a0 * r * a0.transpose();
    let mut s = kron(&(ones_matrix(n) * sigma2 + phi), &k) + kron(&psi, &identity(a0.nrows()));
    symmetrize(&mut s);
    Ok(s)
}

/// Closed-form inverse of `sigma^2 (1 1^T) ⊗ I + v^2 I` for two arrays.
pub fn sigma_inverse_cellwise(sigma2: f64, v2: f64, n_cells: usize) -> Result<Matrix> {
    if !(v2 > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma2 = {sigma2} must be >= 0")));
    }
    let c = 1.0 / (v2 * (2.0 * sigma2 + v2));
    let blocks = Matrix::from_row_slice(2, 2, &[sigma2 + v2, -sigma2, -sigma2, sigma2 + v2]) * c;
    Ok(kron(&blocks, &identity(n_cells)))
}
