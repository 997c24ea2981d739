//! Shock partitions `pi(i, j) -> p` for the five standard dependence types.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::array::Cell;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionKind {
    ArrayWide,
    CellWise,
    RowWise,
    ColumnWise,
    DiagonalWise,
}

impl PartitionKind {
    pub const NAMES: &'static str = "array, cell, row, column, diagonal";
    pub const ALL: [Self; 5] = [
        Self::ArrayWide,
        Self::CellWise,
        Self::RowWise,
        Self::ColumnWise,
        Self::DiagonalWise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ArrayWide => "array",
            Self::CellWise => "cell",
            Self::RowWise => "row",
            Self::ColumnWise => "column",
            Self::DiagonalWise => "diagonal",
        }
    }

    /// Natural identifier of the subset containing `cell`.
    pub fn key_of(self, cell: Cell) -> SubsetKey {
        match self {
            Self::ArrayWide => SubsetKey::All,
            Self::CellWise => SubsetKey::Cell(cell),
            Self::RowWise => SubsetKey::Row(cell.row),
            Self::ColumnWise => SubsetKey::Col(cell.col),
            Self::DiagonalWise => SubsetKey::Diagonal(cell.diagonal()),
        }
    }
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "array" => Ok(Self::ArrayWide),
            "cell" => Ok(Self::CellWise),
            "row" => Ok(Self::RowWise),
            "column" => Ok(Self::ColumnWise),
            "diagonal" => Ok(Self::DiagonalWise),
            other => Err(Error::UnknownName {
                what: "partition",
                value: other.to_string(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// Grid-level identity of a partition subset, stable across different cell lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubsetKey {
    All,
    Cell(Cell),
    Row(usize),
    Col(usize),
    Diagonal(usize),
}

impl fmt::Display for SubsetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::Cell(c) => write!(f, "cell({},{})", c.row, c.col),
            Self::Row(i) => write!(f, "row {i}"),
            Self::Col(j) => write!(f, "col {j}"),
            Self::Diagonal(t) => write!(f, "diag {t}"),
        }
    }
}

/// Partition of a list of cells into `P` nonempty subsets, labelled `0..P`.
///
/// Labels are contiguous over the cells actually present: a row of a triangle with
/// no cells gets no label. Cell-wise labels follow the cell order supplied, so they
/// coincide with stacking positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    kind: PartitionKind,
    labels: Vec<usize>,
    keys: Vec<SubsetKey>,
}

impl Partition {
    pub fn build(kind: PartitionKind, cells: &[Cell]) -> Self {
        let keys_per_cell: Vec<SubsetKey> = cells.iter().map(|&c| kind.key_of(c)).collect();
        let keys: Vec<SubsetKey> = match kind {
            PartitionKind::CellWise => keys_per_cell.clone(),
            _ => {
                let mut sorted: Vec<SubsetKey> = keys_per_cell.clone();
                sorted.sort();
                sorted.dedup();
                sorted
            }
        };
        let index: BTreeMap<SubsetKey, usize> = keys.iter().enumerate().map(|(p, &k)| (k, p)).collect();
        let labels = keys_per_cell.iter().map(|k| index[k]).collect();
        Self { kind, labels, keys }
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    /// `P`.
    pub fn n_subsets(&self) -> usize {
        self.keys.len()
    }

    /// Subset label (0-based) of the cell at stacking position `k`.
    pub fn label(&self, k: usize) -> usize {
        self.labels[k]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn keys(&self) -> &[SubsetKey] {
        &self.keys
    }

    /// Stacking positions belonging to subset `p`.
    pub fn members(&self, p: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(k, &l)| (l == p).then_some(k))
            .collect()
    }
}

/// Builds the partition of a layout's cells.
pub fn build_partition(kind: PartitionKind, layout: &crate::array::ArrayLayout) -> Partition {
    Partition::build(kind, layout.cells())
}
