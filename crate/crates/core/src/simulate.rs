//! Synthetic claim collections from the multiplicative shock model
//! `ln X = A ln U + ln Z`, with `ln U_p ~ N(xi, sigma^2)` per partition subset and
//! `ln Z_ij^(n) ~ N(chi_i^(n) + rho_j^(n), v^2)`.
//!
//! Every draw has its own ChaCha8 stream keyed by `(n, i, j)` or by the subset's natural
//! key, so a cell's value depends neither on generation order nor on the layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{ArrayLayout, CellTable, ClaimCollection};
use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionKind, SubsetKey};

const SHOCK_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    None,
    /// Round to the nearest integer, at least 1.
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub layout: ArrayLayout,
    pub partition: PartitionKind,
    /// `exp(chi_i^(n))` as `[n][i - 1]`.
    pub row_levels: Vec<Vec<f64>>,
    /// `exp(rho_j^(n))` as `[n][j - 1]`.
    pub col_levels: Vec<Vec<f64>>,
    /// `E[ln U]`.
    pub shock_mean: f64,
    pub sigma: f64,
    pub v: f64,
    pub seed: u64,
    pub rounding: Rounding,
}

/// Development pattern of the long-tailed array.
pub const LONG_TAIL: [f64; 15] = [
    0.02, 0.03, 0.05, 0.10, 0.15, 0.15, 0.12, 0.10, 0.08, 0.07, 0.05, 0.04, 0.025, 0.010, 0.005,
];

/// Development pattern of the short-tailed array.
pub const SHORT_TAIL: [f64; 15] = [
    0.10, 0.40, 0.30, 0.15, 0.03, 0.01, 0.005, 0.0025, 0.0010, 0.0005, 0.0002, 0.0002, 0.0002, 0.0002, 0.0002,
];

impl SimSpec {
    /// Two 15x15 rectangles, one long-tailed (`exp chi_i = 10000 e^{0.02(i-1)}`) and one
    /// short-tailed (`exp chi_i = 30000 e^{-0.02(i-1)}`), sharing a cell-wise shock with
    /// `xi = 0.15`, `sigma = 0.1`, `v = 0.15`.
    pub fn long_short_tail_pair(seed: u64) -> Self {
        let rows = |base: f64, g: f64| (0..15).map(|i| base * (g * i as f64).exp()).collect::<Vec<f64>>();
        Self {
            layout: ArrayLayout::rectangle(2, 15, 15).expect("valid rectangle"),
            partition: PartitionKind::CellWise,
            row_levels: vec![rows(10000.0, 0.02), rows(30000.0, -0.02)],
            col_levels: vec![LONG_TAIL.to_vec(), SHORT_TAIL.to_vec()],
            shock_mean: 0.15,
            sigma: 0.1,
            v: 0.15,
            seed,
            rounding: Rounding::None,
        }
    }

    fn validate(&self) -> Result<()> {
        let l = &self.layout;
        if !(self.sigma >= 0.0 && self.v >= 0.0) {
            return Err(Error::InvalidParameter("sigma and v must be >= 0".into()));
        }
        let shaped = |t: &Vec<Vec<f64>>, len: usize| t.len() == l.n_arrays() && t.iter().all(|r| r.len() == len);
        if !shaped(&self.row_levels, l.n_rows()) || !shaped(&self.col_levels, l.n_cols()) {
            return Err(Error::Dimension("row and column levels must cover every array, row and column".into()));
        }
        if self.row_levels.iter().chain(&self.col_levels).flatten().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("exp-parameters must be > 0".into()));
        }
        Ok(())
    }

    /// Log-scale mean of cell `(n, cell)`: `xi + chi_i + rho_j`.
    pub fn log_mean(&self, n: usize, row: usize, col: usize) -> f64 {
        self.shock_mean + self.row_levels[n][row - 1].ln() + self.col_levels[n][col - 1].ln()
    }
}

fn standard_normal(seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    StandardNormal.sample(&mut rng)
}

fn cell_stream(n: usize, row: usize, col: usize) -> u64 {
    ((n as u64) << 40) | ((row as u64) << 20) | col as u64
}

fn shock_stream(key: SubsetKey) -> u64 {
    let (tag, row, col) = match key {
        SubsetKey::All => (0, 0, 0),
        SubsetKey::Cell(c) => (1, c.row, c.col),
        SubsetKey::Row(i) => (2, i, 0),
        SubsetKey::Col(j) => (3, 0, j),
        SubsetKey::Diagonal(t) => (4, t, 0),
    };
    SHOCK_STREAM | (tag << 56) | ((row as u64) << 20) | col as u64
}

/// Simulated collection and the shock draws `ln U_p` (one per subset).
pub fn simulate_with_shocks(spec: &SimSpec) -> Result<(ClaimCollection, Vec<f64>)> {
    spec.validate()?;
    let part = Partition::build(spec.partition, spec.layout.cells());
    let ln_u: Vec<f64> = (0..part.n_subsets())
        .map(|p| spec.shock_mean + spec.sigma * standard_normal(spec.seed, shock_stream(part.keys()[p])))
        .collect();
    let positions = spec.layout.cells().to_vec();
    let table = CellTable::from_fn(spec.layout.clone(), |n, cell| {
        let k = positions.iter().position(|&c| c == cell).expect("cell of the layout");
        let ln_z = spec.row_levels[n][cell.row - 1].ln()
            + spec.col_levels[n][cell.col - 1].ln()
            + spec.v * standard_normal(spec.seed, cell_stream(n, cell.row, cell.col));
        let x = (ln_u[part.label(k)] + ln_z).exp();
        match spec.rounding {
            Rounding::None => x,
            Rounding::Integer => x.round().max(1.0),
        }
    });
    Ok((ClaimCollection::new(table)?, ln_u))
}

pub fn simulate(spec: &SimSpec) -> Result<ClaimCollection> {
    simulate_with_shocks(spec).map(|(c, _)| c)
}

/// Per-cell shock multipliers of the additive and multiplicative constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    /// `U_p^alpha_p` per cell.
    pub multiplicative: Vec<f64>,
    /// `alpha_p W_p / Z_kl` per cell.
    pub additive: Vec<f64>,
    /// max/min of the multiplicative multipliers in each subset.
    pub multiplicative_ratio: Vec<f64>,
    /// max/min of the additive multipliers in each subset.
    pub additive_ratio: Vec<f64>,
}

fn spread(values: &[f64], part: &Partition) -> Vec<f64> {
    (0..part.n_subsets())
        .map(|p| {
            let m = part.members(p);
            let max = m.iter().map(|&k| values[k]).fold(f64::NEG_INFINITY, f64::max);
            let min = m.iter().map(|&k| values[k]).fold(f64::INFINITY, f64::min);
            if max == min {
                1.0
            } else {
                max / min
            }
        })
        .collect()
}

/// Compares how a shock's proportionate contribution varies within each subset.
///
/// `alpha[p]` is the coefficient of subset `p`, `shock[p]` its shock draw (`U_p` or
/// `W_p`, raw scale) and `z[k]` the idiosyncratic value of the cell at position `k`.
pub fn balance_diagnostic(part: &Partition, alpha: &[f64], shock: &[f64], z: &[f64]) -> Result<BalanceReport> {
    if alpha.len() != part.n_subsets() || shock.len() != part.n_subsets() || z.len() != part.labels().len() {
        return Err(Error::Dimension("alpha and shock need one entry per subset, z one per cell".into()));
    }
    if z.iter().chain(shock).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("shocks and idiosyncratic values must be > 0".into()));
    }
    let multiplicative: Vec<f64> = (0..z.len())
        .map(|k| {
            let p = part.label(k);
            shock[p].powf(alpha[p])
        })
        .collect();
    let additive: Vec<f64> = (0..z.len())
        .map(|k| {
            let p = part.label(k);
            alpha[p] * shock[p] / z[k]
        })
        .collect();
    Ok(BalanceReport {
        multiplicative_ratio: spread(&multiplicative, part),
        additive_ratio: spread(&additive, part),
        multiplicative,
        additive,
    })
}
