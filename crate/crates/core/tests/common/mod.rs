#![allow(dead_code)]

use std::path::PathBuf;

use cshock_core::array::{future_cells, ArrayLayout, Cell, CellTable, ClaimCollection};
use cshock_core::design::{DesignBuilder, DevelopmentForm, ShockSpec};
use cshock_core::partition::PartitionKind;
use cshock_core::ModelDesign;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// The two printed 15x15 rectangles as `[array][row-1][col-1]`.
pub fn rectangles() -> [[[f64; 15]; 15]; 2] {
    let mut out = [[[0.0; 15]; 15]; 2];
    for (n, file) in ["data_set_1.csv", "data_set_2.csv"].iter().enumerate() {
        let mut rdr = csv::Reader::from_path(fixture(file)).expect("fixture present");
        for rec in rdr.records() {
            let rec = rec.unwrap();
            let array: usize = rec[0].parse().unwrap();
            let i: usize = rec[1].parse().unwrap();
            let j: usize = rec[2].parse().unwrap();
            let v: f64 = rec[3].parse().unwrap();
            assert_eq!(array, n + 1);
            out[n][i - 1][j - 1] = v;
        }
    }
    out
}

pub fn collection(layout: &ArrayLayout) -> ClaimCollection {
    let data = rectangles();
    let table = CellTable::from_fn(layout.clone(), |n, c| data[n][c.row - 1][c.col - 1]);
    ClaimCollection::new(table).unwrap()
}

/// Upper triangles `t <= 15` of both rectangles.
pub fn triangle() -> ArrayLayout {
    ArrayLayout::up_to_diagonal(2, 15, 15, 15).unwrap()
}

pub fn example_builder() -> DesignBuilder {
    DesignBuilder::new(DevelopmentForm::ChainLadder, ShockSpec::across_arrays(PartitionKind::CellWise))
}

pub fn example_design() -> ModelDesign {
    example_builder().assemble(&triangle()).unwrap()
}

pub fn lower_cells() -> Vec<Cell> {
    future_cells(&triangle(), 15)
}

pub use cshock_core::estimation::{fit_cellwise_closed_form, FitResult};
use cshock_core::design::ColumnKey;

/// Stacked log observations of the triangle fit.
pub fn example_y() -> cshock_core::Vector {
    collection(&triangle()).stack_log()
}

pub fn example_fit() -> (ModelDesign, FitResult) {
    let design = example_design();
    let fit = fit_cellwise_closed_form(&example_y(), &design, 100).unwrap();
    (design, fit)
}

/// `exp(chi_i - chi_1)` for rows 1..=15 of array `n`.
pub fn row_ratios(design: &ModelDesign, fit: &FitResult, n: usize) -> Vec<f64> {
    (1..=15)
        .map(|row| match design.index_of(ColumnKey::RowEffect { array: n, row }) {
            Some(k) => fit.kappa_hat[k].exp(),
            None => 1.0,
        })
        .collect()
}

/// `exp(u + chi_1 + rho_j)` for columns 1..=15 of array `n`.
pub fn col_levels(design: &ModelDesign, fit: &FitResult, n: usize) -> Vec<f64> {
    (1..=15)
        .map(|col| fit.kappa_hat[design.index_of(ColumnKey::ColEffect { array: n, col }).unwrap()].exp())
        .collect()
}

/// Printed estimates as `[array] -> (row ratios, column levels)`.
pub const PRINTED_ROWS: [[f64; 15]; 2] = [
    [1.000, 0.921, 0.922, 1.221, 1.060, 1.046, 1.081, 1.057, 0.963, 1.159, 1.107, 1.050, 1.338, 1.347, 1.334],
    [1.000, 0.896, 0.906, 0.959, 0.876, 0.883, 0.868, 0.851, 0.789, 0.878, 0.804, 0.869, 0.785, 0.805, 0.813],
];
pub const PRINTED_COLS: [[f64; 15]; 2] = [
    [248.0, 364.0, 636.0, 1295.0, 1899.0, 1752.0, 1511.0, 1143.0, 848.0, 836.0, 591.0, 508.0, 285.0, 106.0, 52.0],
    [3569.9, 14398.8, 10880.9, 5441.2, 1098.0, 350.1, 183.2, 86.6, 35.5, 18.8, 7.2, 7.8, 7.1, 6.8, 6.8],
];
pub const TRUE_COLS: [[f64; 15]; 2] = [
    [232.0, 349.0, 581.0, 1162.0, 1743.0, 1743.0, 1394.0, 1162.0, 929.0, 813.0, 581.0, 465.0, 290.0, 116.0, 58.0],
    [3485.5, 13942.0, 10456.5, 5228.3, 1045.7, 348.6, 174.3, 87.1, 34.9, 17.4, 7.0, 7.0, 7.0, 7.0, 7.0],
];
