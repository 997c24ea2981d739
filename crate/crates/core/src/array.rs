//! Claim arrays, their shared mask and the canonical stacking order.
//!
//! Cells are addressed with 1-based `(row, col)` pairs, rows being accident periods
//! and columns development periods. Every array in a collection shares the same mask
//! and the same stacking order; stacked vectors are array-major, i.e. array 1's cells
//! in stacking order, then array 2's, and so on.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kronecker::Vector;

/// A 1-based `(row, col)` position in a claim array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Calendar diagonal `t = row + col - 1`.
    pub const fn diagonal(self) -> usize {
        self.row + self.col - 1
    }
}

/// Calendar diagonal of cell `(i, j)`: `t = i + j - 1`.
pub const fn diagonal_of(row: usize, col: usize) -> usize {
    row + col - 1
}

/// Shape, mask and stacking order shared by all arrays of a collection.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    n_arrays: usize,
    n_rows: usize,
    n_cols: usize,
    order: Vec<Cell>,
    position: HashMap<Cell, usize>,
}

impl ArrayLayout {
    /// Layout over the given cells, stacked in the order supplied.
    pub fn with_order(n_arrays: usize, n_rows: usize, n_cols: usize, order: Vec<Cell>) -> Result<Self> {
        if n_arrays == 0 || n_rows == 0 || n_cols == 0 {
            return Err(Error::Layout(format!(
                "dimensions must be positive (N = {n_arrays}, I = {n_rows}, J = {n_cols})"
            )));
        }
        let mut position = HashMap::with_capacity(order.len());
        for (k, &cell) in order.iter().enumerate() {
            if cell.row == 0 || cell.row > n_rows || cell.col == 0 || cell.col > n_cols {
                return Err(Error::Layout(format!(
                    "cell ({}, {}) lies outside the {n_rows} x {n_cols} grid",
                    cell.row, cell.col
                )));
            }
            if position.insert(cell, k).is_some() {
                return Err(Error::Layout(format!(
                    "cell ({}, {}) appears twice in the stacking order",
                    cell.row, cell.col
                )));
            }
        }
        Ok(Self {
            n_arrays,
            n_rows,
            n_cols,
            order,
            position,
        })
    }

    /// Layout over the cells accepted by `mask`, stacked in dictionary (row-major) order.
    pub fn from_mask(
        n_arrays: usize,
        n_rows: usize,
        n_cols: usize,
        mask: impl Fn(Cell) -> bool,
    ) -> Result<Self> {
        let order = grid(n_rows, n_cols).filter(|&c| mask(c)).collect();
        Self::with_order(n_arrays, n_rows, n_cols, order)
    }

    /// Full `n_rows x n_cols` rectangle.
    pub fn rectangle(n_arrays: usize, n_rows: usize, n_cols: usize) -> Result<Self> {
        Self::from_mask(n_arrays, n_rows, n_cols, |_| true)
    }

    /// Cells of an `n_rows x n_cols` grid on diagonals `t <= t_max`.
    pub fn up_to_diagonal(n_arrays: usize, n_rows: usize, n_cols: usize, t_max: usize) -> Result<Self> {
        Self::from_mask(n_arrays, n_rows, n_cols, |c| c.diagonal() <= t_max)
    }

    /// Conventional `size x size` claim triangle.
    pub fn triangle(n_arrays: usize, size: usize) -> Result<Self> {
        Self::up_to_diagonal(n_arrays, size, size, size)
    }

    pub fn n_arrays(&self) -> usize {
        self.n_arrays
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// `|A|`, the number of masked-in cells per array.
    pub fn n_cells(&self) -> usize {
        self.order.len()
    }

    /// `N |A|`, the length of a stacked vector.
    pub fn stacked_len(&self) -> usize {
        self.n_arrays * self.order.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.order
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.position.contains_key(&cell)
    }

    /// Position of `cell` within one array's stacking order.
    pub fn position_of(&self, cell: Cell) -> Option<usize> {
        self.position.get(&cell).copied()
    }

    /// Index into a stacked vector of array `n` (0-based) and `cell`.
    pub fn stacked_index(&self, n: usize, cell: Cell) -> Option<usize> {
        if n >= self.n_arrays {
            return None;
        }
        self.position_of(cell).map(|k| n * self.n_cells() + k)
    }

    /// Largest observed calendar diagonal.
    pub fn t_max(&self) -> usize {
        self.order.iter().map(|c| c.diagonal()).max().unwrap_or(0)
    }

    /// Same grid and array count, restricted to cells accepted by `keep`, with the
    /// existing stacking order preserved.
    pub fn restrict(&self, keep: impl Fn(Cell) -> bool) -> Result<Self> {
        let order = self.order.iter().copied().filter(|&c| keep(c)).collect();
        Self::with_order(self.n_arrays, self.n_rows, self.n_cols, order)
    }
}

fn grid(n_rows: usize, n_cols: usize) -> impl Iterator<Item = Cell> {
    (1..=n_rows).flat_map(move |i| (1..=n_cols).map(move |j| Cell::new(i, j)))
}

/// Forecast region: cells of the layout's grid with `t > t_max`, in dictionary order.
pub fn future_cells(layout: &ArrayLayout, t_max: usize) -> Vec<Cell> {
    grid(layout.n_rows(), layout.n_cols())
        .filter(|c| c.diagonal() > t_max)
        .collect()
}

/// One real value per `(array, cell)` of a layout, stored in stacked order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    layout: ArrayLayout,
    values: Vec<f64>,
}

impl CellTable {
    pub fn new(layout: ArrayLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.stacked_len() {
            return Err(Error::Dimension(format!(
                "expected {} stacked values, got {}",
                layout.stacked_len(),
                values.len()
            )));
        }
        Ok(Self { layout, values })
    }

    pub fn from_fn(layout: ArrayLayout, f: impl Fn(usize, Cell) -> f64) -> Self {
        let values = (0..layout.n_arrays())
            .flat_map(|n| layout.cells().iter().map(move |&c| (n, c)))
            .map(|(n, c)| f(n, c))
            .collect();
        Self { layout, values }
    }

    pub fn layout(&self) -> &ArrayLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value for array `n` (0-based) at `cell`.
    pub fn get(&self, n: usize, cell: Cell) -> Option<f64> {
        self.layout.stacked_index(n, cell).map(|k| self.values[k])
    }

    /// Values of array `n` in stacking order.
    pub fn array(&self, n: usize) -> &[f64] {
        let a = self.layout.n_cells();
        &self.values[n * a..(n + 1) * a]
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_column_slice(&self.values)
    }
}

/// Inverse of the stacking map: assigns `vec[k]` back to its `(array, cell)`.
pub fn unstack(vec: &Vector, layout: &ArrayLayout) -> Result<CellTable> {
    CellTable::new(layout.clone(), vec.iter().copied().collect())
}

/// Positive claim amounts on a shared layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCollection {
    table: CellTable,
}

impl ClaimCollection {
    /// Wraps a table of claim amounts, rejecting any value that is not strictly positive.
    pub fn new(table: CellTable) -> Result<Self> {
        let layout = table.layout();
        for n in 0..layout.n_arrays() {
            for (&cell, &value) in layout.cells().iter().zip(table.array(n)) {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::NonPositiveValue {
                        array: n + 1,
                        row: cell.row,
                        col: cell.col,
                        value,
                    });
                }
            }
        }
        Ok(Self { table })
    }

    pub fn layout(&self) -> &ArrayLayout {
        self.table.layout()
    }

    pub fn table(&self) -> &CellTable {
        &self.table
    }

    pub fn get(&self, n: usize, cell: Cell) -> Option<f64> {
        self.table.get(n, cell)
    }

    /// Log claims stacked array-major: `Y[k] = ln X[k]`.
    pub fn stack_log(&self) -> Vector {
        Vector::from_iterator(self.table.values.len(), self.table.values.iter().map(|v| v.ln()))
    }

    /// The same claims restricted to a sub-layout (for example the fitting triangle).
    pub fn restrict(&self, layout: &ArrayLayout) -> Result<Self> {
        let mut values = Vec::with_capacity(layout.stacked_len());
        for n in 0..layout.n_arrays() {
            for &cell in layout.cells() {
                let v = self.get(n, cell).ok_or_else(|| {
                    Error::Layout(format!(
                        "cell ({}, {}) of array {} is not present in the collection",
                        cell.row,
                        cell.col,
                        n + 1
                    ))
                })?;
                values.push(v);
            }
        }
        Self::new(CellTable::new(layout.clone(), values)?)
    }
}
