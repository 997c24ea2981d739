//! Design matrices for the log-scale mean `theta = M kappa = [A B C] (xi, eta, zeta)`
//! and the covariance loading `L = [A B I]`.
//!
//! The idiosyncratic block `C` is block-diagonal over arrays, with either a
//! cross-classified chain-ladder form (`chi_i + rho_j`, corner constraint `chi_1 = 0`)
//! or a Hoerl form (`c_i + chi ln j - rho j`). Shock means enter through `A` and `B`.
//! Aliased columns are removed greedily in priority order `C`, calendar, `A`, `B`, so
//! the common-shock mean is the one absorbed when it duplicates the column effects.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::array::{ArrayLayout, Cell};
use crate::error::{Error, Result};
use crate::kronecker::{hcat, Matrix, Vector};
use crate::partition::{Partition, PartitionKind, SubsetKey};

/// Relative singular-value threshold below which a direction is treated as aliased.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DevelopmentForm {
    /// `chi_i + rho_j` with `chi_1 = 0`; `(I - 1) + J` parameters per array.
    ChainLadder,
    /// `c_i + chi ln j - rho j`; `I + 2` parameters per array.
    Hoerl,
}

impl DevelopmentForm {
    pub const NAMES: &'static str = "chain_ladder, hoerl";
}

impl FromStr for DevelopmentForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "chain_ladder" => Ok(Self::ChainLadder),
            "hoerl" => Ok(Self::Hoerl),
            other => Err(Error::UnknownName {
                what: "design",
                value: other.to_string(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// How a shock's log-scale mean is parameterised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShockMean {
    /// One mean shared by every subset (`xi` scalar; one `eta` per array).
    Common,
    /// One mean per subset (`xi` of length `P`; `eta` of length `N P`).
    PerSubset,
}

/// Shock coefficients `alpha_ij^(n)` or `beta_ij^(n)` over the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Uniform(f64),
    /// Values indexed `[n][(row - 1) * n_cols + (col - 1)]`.
    Grid { n_cols: usize, values: Vec<Vec<f64>> },
}

impl Coefficients {
    pub fn from_fn(n_arrays: usize, n_rows: usize, n_cols: usize, f: impl Fn(usize, Cell) -> f64) -> Self {
        let values = (0..n_arrays)
            .map(|n| {
                (1..=n_rows)
                    .flat_map(|i| (1..=n_cols).map(move |j| Cell::new(i, j)))
                    .map(|c| f(n, c))
                    .collect()
            })
            .collect();
        Self::Grid { n_cols, values }
    }

    pub fn get(&self, n: usize, cell: Cell) -> f64 {
        match self {
            Self::Uniform(c) => *c,
            Self::Grid { n_cols, values } => values[n][(cell.row - 1) * n_cols + (cell.col - 1)],
        }
    }

    fn min_value(&self) -> f64 {
        match self {
            Self::Uniform(c) => *c,
            Self::Grid { values, .. } => values.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// True when the coefficient of each cell is the same for every array.
    pub fn is_array_invariant(&self) -> bool {
        match self {
            Self::Uniform(_) => true,
            Self::Grid { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

/// Which common shocks are present and how they load on cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockSpec {
    /// Across-array shock `U`.
    pub include_u: bool,
    /// Within-array shock `W`.
    pub include_w: bool,
    pub partition: PartitionKind,
    pub alpha: Coefficients,
    pub beta: Coefficients,
    pub u_mean: ShockMean,
    pub w_mean: ShockMean,
}

impl ShockSpec {
    /// No common shocks: the classical cross-classified model per array.
    pub fn none() -> Self {
        Self {
            include_u: false,
            include_w: false,
            partition: PartitionKind::ArrayWide,
            alpha: Coefficients::Uniform(1.0),
            beta: Coefficients::Uniform(1.0),
            u_mean: ShockMean::Common,
            w_mean: ShockMean::Common,
        }
    }

    /// A single across-array shock on the given partition with unit coefficients.
    pub fn across_arrays(partition: PartitionKind) -> Self {
        Self {
            include_u: true,
            partition,
            ..Self::none()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.include_u && self.alpha.min_value() < 0.0 {
            return Err(Error::InvalidParameter("shock coefficients alpha must be >= 0".into()));
        }
        if self.include_w && self.beta.min_value() < 0.0 {
            return Err(Error::InvalidParameter("shock coefficients beta must be >= 0".into()));
        }
        Ok(())
    }
}

/// Identity of a column of the unreduced design `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKey {
    XiCommon,
    Xi(SubsetKey),
    EtaCommon { array: usize },
    Eta { array: usize, key: SubsetKey },
    RowEffect { array: usize, row: usize },
    ColEffect { array: usize, col: usize },
    HoerlLevel { array: usize, row: usize },
    HoerlLog { array: usize },
    HoerlLinear { array: usize },
    Calendar { array: usize, t: usize },
    Extra(usize),
}

impl ColumnKey {
    /// Array (0-based) the column belongs to, if it is array-specific.
    pub fn array(self) -> Option<usize> {
        match self {
            Self::EtaCommon { array }
            | Self::Eta { array, .. }
            | Self::RowEffect { array, .. }
            | Self::ColEffect { array, .. }
            | Self::HoerlLevel { array, .. }
            | Self::HoerlLog { array }
            | Self::HoerlLinear { array }
            | Self::Calendar { array, .. } => Some(array),
            Self::XiCommon | Self::Xi(_) | Self::Extra(_) => None,
        }
    }

    // (block, array, kind, index) with blocks A = 0, B = 1, C = 2, calendar = 3, extra = 4
    fn layout_rank(self) -> (u8, usize, u8, usize) {
        let sub = |k: SubsetKey| match k {
            SubsetKey::All => 0,
            SubsetKey::Cell(c) => c.row * 100_000 + c.col,
            SubsetKey::Row(i) | SubsetKey::Col(i) | SubsetKey::Diagonal(i) => i,
        };
        match self {
            Self::XiCommon => (0, 0, 0, 0),
            Self::Xi(k) => (0, 0, 1, sub(k)),
            Self::EtaCommon { array } => (1, array, 0, 0),
            Self::Eta { array, key } => (1, array, 1, sub(key)),
            Self::RowEffect { array, row } => (2, array, 0, row),
            Self::ColEffect { array, col } => (2, array, 1, col),
            Self::HoerlLevel { array, row } => (2, array, 0, row),
            Self::HoerlLog { array } => (2, array, 2, 0),
            Self::HoerlLinear { array } => (2, array, 3, 0),
            Self::Calendar { array, t } => (3, array, 0, t),
            Self::Extra(i) => (4, 0, 0, i),
        }
    }

    // C first, then calendar, then shock means: aliased shock means are the ones dropped
    fn priority(self) -> (u8, usize, u8, usize) {
        let (block, a, k, i) = self.layout_rank();
        let p = match block {
            2 => 0,
            3 => 1,
            0 => 2,
            1 => 3,
            _ => 4,
        };
        (p, a, k, i)
    }
}

impl fmt::Display for ColumnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::XiCommon => f.write_str("xi"),
            Self::Xi(k) => write!(f, "xi[{k}]"),
            Self::EtaCommon { array } => write!(f, "eta[{}]", array + 1),
            Self::Eta { array, key } => write!(f, "eta[{}; {key}]", array + 1),
            Self::RowEffect { array, row } => write!(f, "chi[{}; {row}]", array + 1),
            Self::ColEffect { array, col } => write!(f, "rho[{}; {col}]", array + 1),
            Self::HoerlLevel { array, row } => write!(f, "c[{}; {row}]", array + 1),
            Self::HoerlLog { array } => write!(f, "hoerl_chi[{}]", array + 1),
            Self::HoerlLinear { array } => write!(f, "hoerl_rho[{}]", array + 1),
            Self::Calendar { array, t } => write!(f, "gamma[{}; {t}]", array + 1),
            Self::Extra(i) => write!(f, "extra[{i}]"),
        }
    }
}

/// Unreduced design columns with their identities.
#[derive(Debug, Clone)]
pub struct DesignColumns {
    pub matrix: Matrix,
    pub keys: Vec<ColumnKey>,
}

impl DesignColumns {
    pub fn new(matrix: Matrix, keys: Vec<ColumnKey>) -> Result<Self> {
        if matrix.ncols() != keys.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} column keys",
                matrix.ncols(),
                keys.len()
            )));
        }
        Ok(Self { matrix, keys })
    }

    /// Appends one column (for example an extra covariate).
    pub fn push(&mut self, key: ColumnKey, column: &Vector) -> Result<()> {
        if column.len() != self.matrix.nrows() {
            return Err(Error::Dimension("appended column has the wrong length".into()));
        }
        let n = self.matrix.ncols();
        let m = std::mem::replace(&mut self.matrix, Matrix::zeros(0, 0));
        self.matrix = m.insert_column(n, 0.0);
        self.matrix.set_column(n, column);
        self.keys.push(key);
        Ok(())
    }
}

/// Log-scale offsets for calendar diagonals that were never observed, keyed by
/// `(array, t)` with 0-based array index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalendarOffsets {
    values: BTreeMap<(usize, usize), f64>,
    variances: BTreeMap<(usize, usize), f64>,
}

impl CalendarOffsets {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `gammas[h]` for diagonals `t_first + h` of `array`.
    pub fn insert_sequence(&mut self, array: usize, t_first: usize, gammas: &[f64]) {
        for (h, &g) in gammas.iter().enumerate() {
            self.values.insert((array, t_first + h), g);
        }
    }

    /// Extra process variance attached to the offset of `(array, t)`.
    pub fn insert_variance(&mut self, array: usize, t: usize, variance: f64) {
        self.variances.insert((array, t), variance);
    }

    pub fn get(&self, array: usize, t: usize) -> Option<f64> {
        self.values.get(&(array, t)).copied()
    }

    pub fn variance(&self, array: usize, t: usize) -> f64 {
        self.variances.get(&(array, t)).copied().unwrap_or(0.0)
    }
}

/// Rules that generate design rows for any cell, observed or future.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBuilder {
    pub form: DevelopmentForm,
    pub shocks: ShockSpec,
    /// Adds one calendar-period parameter per observed diagonal and array.
    pub calendar: bool,
}

impl DesignBuilder {
    pub fn new(form: DevelopmentForm, shocks: ShockSpec) -> Self {
        Self {
            form,
            shocks,
            calendar: false,
        }
    }

    /// Nonzero entries of the unreduced design row for array `n` and `cell`.
    pub fn row_entries(&self, n: usize, cell: Cell) -> Vec<(ColumnKey, f64)> {
        let s = &self.shocks;
        let mut out = Vec::with_capacity(6);
        if s.include_u {
            let a = s.alpha.get(n, cell);
            let key = match s.u_mean {
                ShockMean::Common => ColumnKey::XiCommon,
                ShockMean::PerSubset => ColumnKey::Xi(s.partition.key_of(cell)),
            };
            out.push((key, a));
        }
        if s.include_w {
            let b = s.beta.get(n, cell);
            let key = match s.w_mean {
                ShockMean::Common => ColumnKey::EtaCommon { array: n },
                ShockMean::PerSubset => ColumnKey::Eta {
                    array: n,
                    key: s.partition.key_of(cell),
                },
            };
            out.push((key, b));
        }
        match self.form {
            DevelopmentForm::ChainLadder => {
                if cell.row >= 2 {
                    out.push((ColumnKey::RowEffect { array: n, row: cell.row }, 1.0));
                }
                out.push((ColumnKey::ColEffect { array: n, col: cell.col }, 1.0));
            }
            DevelopmentForm::Hoerl => {
                let j = cell.col as f64;
                out.push((ColumnKey::HoerlLevel { array: n, row: cell.row }, 1.0));
                out.push((ColumnKey::HoerlLog { array: n }, j.ln()));
                out.push((ColumnKey::HoerlLinear { array: n }, -j));
            }
        }
        if self.calendar {
            out.push((
                ColumnKey::Calendar {
                    array: n,
                    t: cell.diagonal(),
                },
                1.0,
            ));
        }
        out
    }

    /// Unreduced `M` over a layout, columns in `[A B C calendar]` order.
    pub fn columns(&self, layout: &ArrayLayout) -> DesignColumns {
        let rows: Vec<Vec<(ColumnKey, f64)>> = (0..layout.n_arrays())
            .flat_map(|n| layout.cells().iter().map(move |&c| (n, c)))
            .map(|(n, c)| self.row_entries(n, c))
            .collect();
        let mut keys: Vec<ColumnKey> = Vec::new();
        let mut seen = HashMap::new();
        for row in &rows {
            for &(k, _) in row {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(k) {
                    e.insert(());
                    keys.push(k);
                }
            }
        }
        keys.sort_by_key(|k| k.layout_rank());
        let index: HashMap<ColumnKey, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut m = Matrix::zeros(rows.len(), keys.len());
        for (r, row) in rows.iter().enumerate() {
            for &(k, v) in row {
                m[(r, index[&k])] += v;
            }
        }
        DesignColumns { matrix: m, keys }
    }

    /// Assembles and reduces the design for the observed layout.
    pub fn assemble(&self, layout: &ArrayLayout) -> Result<ModelDesign> {
        self.shocks.validate()?;
        let columns = self.columns(layout);
        let mut design = ModelDesign::from_columns(layout.clone(), columns)?;
        design.partition = Partition::build(self.shocks.partition, layout.cells());
        design.a = if self.shocks.include_u {
            build_a(&design.partition, layout, &self.shocks.alpha)
        } else {
            Matrix::zeros(layout.stacked_len(), 0)
        };
        design.b = if self.shocks.include_w {
            build_b(&design.partition, layout, &self.shocks.beta)
        } else {
            Matrix::zeros(layout.stacked_len(), 0)
        };
        design.builder = Some(self.clone());
        Ok(design)
    }
}

/// `A`: row for `(n, cell)` holds `alpha` in the column of the cell's subset.
pub fn build_a(partition: &Partition, layout: &ArrayLayout, alpha: &Coefficients) -> Matrix {
    let a = layout.n_cells();
    let mut m = Matrix::zeros(layout.stacked_len(), partition.n_subsets());
    for n in 0..layout.n_arrays() {
        for (k, &cell) in layout.cells().iter().enumerate() {
            m[(n * a + k, partition.label(k))] = alpha.get(n, cell);
        }
    }
    m
}

/// `B`: block-diagonal over arrays, each block built like `A` from `beta`.
pub fn build_b(partition: &Partition, layout: &ArrayLayout, beta: &Coefficients) -> Matrix {
    let a = layout.n_cells();
    let p = partition.n_subsets();
    let mut m = Matrix::zeros(layout.stacked_len(), layout.n_arrays() * p);
    for n in 0..layout.n_arrays() {
        for (k, &cell) in layout.cells().iter().enumerate() {
            m[(n * a + k, n * p + partition.label(k))] = beta.get(n, cell);
        }
    }
    m
}

fn single_array_block(form: DevelopmentForm, layout: &ArrayLayout) -> (Matrix, Vec<ColumnKey>) {
    let one = ArrayLayout::with_order(1, layout.n_rows(), layout.n_cols(), layout.cells().to_vec())
        .expect("sub-layout of a valid layout");
    let cols = DesignBuilder::new(form, ShockSpec::none()).columns(&one);
    (cols.matrix, cols.keys)
}

/// Per-array chain-ladder selector `C^(n)` with the `chi_1` column removed.
pub fn build_c_chain_ladder(layout: &ArrayLayout) -> (Matrix, Vec<ColumnKey>) {
    single_array_block(DevelopmentForm::ChainLadder, layout)
}

/// Per-array Hoerl block: `1` in the `c_i` column, `ln j` and `-j`.
pub fn build_c_hoerl(layout: &ArrayLayout) -> (Matrix, Vec<ColumnKey>) {
    single_array_block(DevelopmentForm::Hoerl, layout)
}

/// A reduced, full-column-rank design with its bookkeeping.
#[derive(Debug, Clone)]
pub struct ModelDesign {
    layout: ArrayLayout,
    m: Matrix,
    keys: Vec<ColumnKey>,
    full: DesignColumns,
    kept: Vec<usize>,
    /// Each dropped column as a combination of kept columns (coefficients over `kept`).
    aliases: Vec<(usize, Vector)>,
    partition: Partition,
    a: Matrix,
    b: Matrix,
    builder: Option<DesignBuilder>,
}

impl ModelDesign {
    /// Removes aliased columns and records how each dropped column depends on the
    /// kept ones.
    pub fn from_columns(layout: ArrayLayout, columns: DesignColumns) -> Result<Self> {
        let rows = layout.stacked_len();
        if columns.matrix.nrows() != rows {
            return Err(Error::Dimension(format!(
                "design has {} rows but the layout stacks {} cells",
                columns.matrix.nrows(),
                rows
            )));
        }
        if columns.matrix.ncols() == 0 {
            return Err(Error::EmptyDesign);
        }
        let full_m = &columns.matrix;
        let sv = full_m.clone().svd(false, false).singular_values;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        if smax == 0.0 {
            return Err(Error::EmptyDesign);
        }
        let tol = RANK_TOLERANCE * smax;
        let rank = sv.iter().filter(|&&s| s > tol).count();

        let mut order: Vec<usize> = (0..columns.keys.len()).collect();
        order.sort_by_key(|&i| columns.keys[i].priority());
        let mut basis: Vec<Vector> = Vec::with_capacity(rank);
        let mut kept_mask = vec![false; columns.keys.len()];
        for &i in &order {
            let mut r: Vector = full_m.column(i).into_owned();
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&r);
                    r.axpy(-c, q, 1.0);
                }
            }
            let norm = r.norm();
            if norm > tol {
                basis.push(r / norm);
                kept_mask[i] = true;
            }
        }
        let kept: Vec<usize> = (0..columns.keys.len()).filter(|&i| kept_mask[i]).collect();
        if kept.is_empty() {
            return Err(Error::EmptyDesign);
        }
        if kept.len() != rank {
            return Err(Error::Singular(
                kept.iter().map(|&i| columns.keys[i].to_string()).collect(),
            ));
        }
        let m = full_m.select_columns(kept.iter());
        let qr = m.clone().qr();
        let mut aliases = Vec::new();
        for i in (0..columns.keys.len()).filter(|&i| !kept_mask[i]) {
            let rhs = full_m.column(i).into_owned();
            let qtb = qr.q().transpose() * rhs;
            let coef = qr
                .r()
                .solve_upper_triangular(&qtb)
                .ok_or_else(|| Error::Singular(vec![columns.keys[i].to_string()]))?;
            aliases.push((i, coef));
        }
        let keys = kept.iter().map(|&i| columns.keys[i]).collect();
        let n_rows = layout.stacked_len();
        Ok(Self {
            partition: Partition::build(PartitionKind::ArrayWide, layout.cells()),
            layout,
            m,
            keys,
            full: columns,
            kept,
            aliases,
            a: Matrix::zeros(n_rows, 0),
            b: Matrix::zeros(n_rows, 0),
            builder: None,
        })
    }

    /// A design with no location parameters (`y` has mean zero).
    pub fn without_location(layout: ArrayLayout) -> Self {
        let n = layout.stacked_len();
        Self {
            partition: Partition::build(PartitionKind::ArrayWide, layout.cells()),
            layout,
            m: Matrix::zeros(n, 0),
            keys: Vec::new(),
            full: DesignColumns {
                matrix: Matrix::zeros(n, 0),
                keys: Vec::new(),
            },
            kept: Vec::new(),
            aliases: Vec::new(),
            a: Matrix::zeros(n, 0),
            b: Matrix::zeros(n, 0),
            builder: None,
        }
    }

    pub fn layout(&self) -> &ArrayLayout {
        &self.layout
    }

    /// Reduced design `M` (full column rank).
    pub fn m(&self) -> &Matrix {
        &self.m
    }

    /// Identities of the reduced columns, i.e. the layout of `kappa`.
    pub fn keys(&self) -> &[ColumnKey] {
        &self.keys
    }

    pub fn labels(&self) -> Vec<String> {
        self.keys.iter().map(|k| k.to_string()).collect()
    }

    /// Columns removed as aliased.
    pub fn dropped(&self) -> Vec<ColumnKey> {
        self.aliases.iter().map(|(i, _)| self.full.keys[*i]).collect()
    }

    /// Unreduced design.
    pub fn unreduced(&self) -> &DesignColumns {
        &self.full
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Shock loading `A` (`N|A| x P`), empty when no across-array shock.
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// Shock loading `B` (`N|A| x N P`), empty when no within-array shock.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Idiosyncratic block `C` of the unreduced design.
    pub fn c(&self) -> Matrix {
        let idx: Vec<usize> = (0..self.full.keys.len())
            .filter(|&i| matches!(self.full.keys[i].layout_rank().0, 2))
            .collect();
        self.full.matrix.select_columns(idx.iter())
    }

    /// `L = [A B I]`.
    pub fn l(&self) -> Matrix {
        let eye = Matrix::identity(self.layout.stacked_len(), self.layout.stacked_len());
        hcat(&[&self.a, &self.b, &eye])
    }

    pub fn builder(&self) -> Option<&DesignBuilder> {
        self.builder.as_ref()
    }

    pub fn index_of(&self, key: ColumnKey) -> Option<usize> {
        self.keys.iter().position(|&k| k == key)
    }

    /// Design rows `M*` and log-scale offsets for forecast cells of every array.
    ///
    /// Rows are stacked array-major over `cells`. A row is rejected when it needs a
    /// parameter that was never observed (and no calendar offset covers it) or when its
    /// aliased components are not the same combination of kept columns as on the data.
    /// Rows that take a calendar offset skip the alias check: offsets are read in the
    /// fitted parameterization, with dropped columns fixed at zero.
    pub fn forecast_rows(&self, cells: &[Cell], offsets: Option<&CalendarOffsets>) -> Result<(Matrix, Vector, Vector)> {
        let builder = self.builder.as_ref().ok_or_else(|| {
            Error::InvalidParameter("design was not built from rules; forecast rows unavailable".into())
        })?;
        let n_arrays = self.layout.n_arrays();
        let full_index: HashMap<ColumnKey, usize> =
            self.full.keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let kept_pos: HashMap<usize, usize> = self.kept.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let rows = n_arrays * cells.len();
        let mut m_star = Matrix::zeros(rows, self.keys.len());
        let mut offset = Vector::zeros(rows);
        let mut offset_var = Vector::zeros(rows);
        for n in 0..n_arrays {
            for (k, &cell) in cells.iter().enumerate() {
                let r = n * cells.len() + k;
                let mut full_row = Vector::zeros(self.full.keys.len());
                let mut uses_offset = false;
                for (key, v) in builder.row_entries(n, cell) {
                    match full_index.get(&key) {
                        Some(&i) => full_row[i] += v,
                        None => match (key, offsets) {
                            (ColumnKey::Calendar { array, t }, Some(o)) if o.get(array, t).is_some() => {
                                offset[r] += v * o.get(array, t).unwrap_or(0.0);
                                offset_var[r] += v * v * o.variance(array, t);
                                uses_offset = true;
                            }
                            (ColumnKey::Calendar { .. }, _) => {
                                return Err(Error::Unestimable {
                                    array: n + 1,
                                    row: cell.row,
                                    col: cell.col,
                                    reason: format!(
                                        "{key} lies beyond the last observed diagonal; \
                                         supply future calendar effects (e.g. from gamma_ar1)"
                                    ),
                                })
                            }
                            _ => {
                                return Err(Error::Unestimable {
                                    array: n + 1,
                                    row: cell.row,
                                    col: cell.col,
                                    reason: format!("parameter {key} is not identified by the data"),
                                })
                            }
                        },
                    }
                }
                for (i, coef) in self.aliases.iter().filter(|_| !uses_offset) {
                    let implied: f64 = self.kept.iter().zip(coef.iter()).map(|(&j, c)| c * full_row[j]).sum();
                    let scale = 1.0 + full_row.amax();
                    if (full_row[*i] - implied).abs() > 1e-8 * scale {
                        return Err(Error::Unestimable {
                            array: n + 1,
                            row: cell.row,
                            col: cell.col,
                            reason: format!(
                                "aliased parameter {} enters differently than on the data",
                                self.full.keys[*i]
                            ),
                        });
                    }
                }
                for (&i, &p) in &kept_pos {
                    m_star[(r, p)] = full_row[i];
                }
            }
        }
        Ok((m_star, offset, offset_var))
    }
}
