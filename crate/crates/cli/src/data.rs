//! Claim CSV ingestion: `array,accident,development,value` rows, one or more files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use cshock_core::{ArrayLayout, Cell, CellTable, ClaimCollection};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
struct Row {
    array: usize,
    accident: usize,
    development: usize,
    value: f64,
}

/// Observed claims of every array on their common cell set.
#[derive(Debug, Clone)]
pub struct Claims {
    pub collection: ClaimCollection,
}

fn data_err(path: &Path, line: Option<u64>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Data(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Data(format!("{}: {msg}", path.display())),
    }
}

fn read_rows(path: &Path, out: &mut BTreeMap<(usize, Cell), (f64, PathBuf, u64)>) -> Result<(), CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, None, format!("cannot open: {e}")))?;
    let headers = rdr.headers().map_err(|e| data_err(path, Some(1), e))?.clone();
    let expected = ["array", "accident", "development", "value"];
    if headers.iter().ne(expected) {
        return Err(data_err(
            path,
            Some(1),
            format!("expected header '{}', got '{}'", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut count = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(path, e.position().map(|p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| data_err(path, Some(line), e))?;
        if row.array == 0 || row.accident == 0 || row.development == 0 {
            return Err(data_err(path, Some(line), "array, accident and development are 1-based"));
        }
        if !(row.value > 0.0 && row.value.is_finite()) {
            return Err(data_err(
                path,
                Some(line),
                format!("claim value {} must be strictly positive", row.value),
            ));
        }
        let key = (row.array, Cell::new(row.accident, row.development));
        if let Some((_, p, l)) = out.get(&key) {
            return Err(data_err(
                path,
                Some(line),
                format!(
                    "array {} cell ({}, {}) already given at {}:{l}",
                    row.array,
                    row.accident,
                    row.development,
                    p.display()
                ),
            ));
        }
        out.insert(key, (row.value, path.to_path_buf(), line));
        count += 1;
    }
    if count == 0 {
        return Err(data_err(path, None, "no claim rows"));
    }
    Ok(())
}

/// Reads every file, checks array labels are `1..=N` and all arrays share one cell set.
pub fn load(paths: &[PathBuf], rows: Option<usize>, cols: Option<usize>) -> Result<Claims, CliError> {
    if paths.is_empty() {
        return Err(CliError::Config("no data files given (set 'data')".into()));
    }
    let mut all = BTreeMap::new();
    for p in paths {
        read_rows(p, &mut all)?;
    }
    let labels: BTreeSet<usize> = all.keys().map(|(n, _)| *n).collect();
    let n_arrays = labels.len();
    if labels.iter().copied().ne(1..=n_arrays) {
        return Err(CliError::Data(format!(
            "array labels must be 1..={n_arrays}, got {:?}",
            labels.iter().collect::<Vec<_>>()
        )));
    }
    let cells_of = |n: usize| all.keys().filter(move |(m, _)| *m == n).map(|(_, c)| *c).collect::<BTreeSet<_>>();
    let cells = cells_of(1);
    for n in 2..=n_arrays {
        let other = cells_of(n);
        if let Some(c) = cells.symmetric_difference(&other).next() {
            return Err(CliError::Data(format!(
                "arrays 1 and {n} are not congruent: cell ({}, {}) is missing from one of them",
                c.row, c.col
            )));
        }
    }
    let max_row = cells.iter().map(|c| c.row).max().unwrap_or(0);
    let max_col = cells.iter().map(|c| c.col).max().unwrap_or(0);
    let n_rows = rows.unwrap_or(max_row);
    let n_cols = cols.unwrap_or(max_col);
    if n_rows < max_row || n_cols < max_col {
        return Err(CliError::Data(format!(
            "data reach cell ({max_row}, {max_col}) beyond the configured {n_rows} x {n_cols} grid"
        )));
    }
    // BTreeSet<Cell> iterates row-major, the dictionary stacking order
    let order: Vec<Cell> = cells.into_iter().collect();
    let layout = ArrayLayout::with_order(n_arrays, n_rows, n_cols, order).map_err(|e| CliError::Data(e.to_string()))?;
    let table = CellTable::from_fn(layout, |n, c| all[&(n + 1, c)].0);
    let collection = ClaimCollection::new(table).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(Claims { collection })
}

/// Reads a forecast mask: `accident,development` rows.
pub fn load_mask(path: &Path) -> Result<Vec<Cell>, CliError> {
    #[derive(Deserialize)]
    struct MaskRow {
        accident: usize,
        development: usize,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, None, format!("cannot open: {e}")))?;
    let mut cells = BTreeSet::new();
    for rec in rdr.deserialize::<MaskRow>() {
        let r = rec.map_err(|e| data_err(path, e.position().map(|p| p.line()), e))?;
        if r.accident == 0 || r.development == 0 {
            return Err(data_err(path, None, "accident and development are 1-based"));
        }
        cells.insert(Cell::new(r.accident, r.development));
    }
    Ok(cells.into_iter().collect())
}
