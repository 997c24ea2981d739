//! Command implementations: config -> data -> design -> fit -> report.

use std::collections::BTreeSet;

use cshock_core::estimation::{dependence_stats, fit_cellwise_closed_form, ml_dispersion_generic};
use cshock_core::forecast::{build_forecast_design, predict};
use cshock_core::simulate::simulate;
use cshock_core::{
    future_cells, ArrayLayout, Cell, ClaimCollection, ColumnKey, DesignBuilder, DevelopmentForm, FitResult,
    GammaStructure, MlOptions, ModelDesign, PartitionKind, Reserve, Rounding, ShockSpec, SimSpec, StructureKind,
    Vector,
};

use crate::config::{Region, RunConfig, Solver};
use crate::data;
use crate::report::{
    Dependence, Dispersion, FitReport, ForecastCell, ForecastReport, InspectReport, LocationTable, Parameter,
    ReserveLine, Summary,
};
use crate::CliError;

/// Observed claims split into the fitting layout and the forecast region.
pub struct Prepared {
    pub observed: ClaimCollection,
    pub design: ModelDesign,
    pub y: Vector,
    pub future: Vec<Cell>,
}

fn shocks(config: &RunConfig) -> ShockSpec {
    ShockSpec {
        include_u: config.shock_u,
        include_w: config.shock_w,
        partition: config.partition,
        ..ShockSpec::none()
    }
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, CliError> {
    let observed = data::load(&config.data, config.rows, config.cols)?.collection;
    let layout = observed.layout();
    let grid = ArrayLayout::rectangle(layout.n_arrays(), layout.n_rows(), layout.n_cols())?;
    let (fit_layout, future) = match &config.region {
        Region::TMax(t) => (layout.restrict(|c| c.diagonal() <= *t)?, future_cells(layout, *t)),
        Region::Mask(path) => {
            let mask = data::load_mask(path)?;
            if let Some(c) = mask.iter().find(|c| !grid.contains(**c)) {
                return Err(CliError::Data(format!(
                    "{}: mask cell ({}, {}) lies outside the {} x {} grid",
                    path.display(),
                    c.row,
                    c.col,
                    grid.n_rows(),
                    grid.n_cols()
                )));
            }
            let masked: BTreeSet<Cell> = mask.iter().copied().collect();
            (layout.restrict(|c| !masked.contains(&c))?, mask)
        }
        Region::Unobserved => {
            let fit = layout.clone();
            let future = grid.cells().iter().copied().filter(|c| !layout.contains(*c)).collect();
            (fit, future)
        }
    };
    if fit_layout.n_cells() == 0 {
        return Err(CliError::Data("no observed cells fall in the fitting region".into()));
    }
    let fitted = observed.restrict(&fit_layout)?;
    let design = DesignBuilder::new(config.design, shocks(config)).assemble(&fit_layout)?;
    Ok(Prepared {
        y: fitted.stack_log(),
        observed,
        design,
        future,
    })
}

fn summary(config: &RunConfig, p: &Prepared) -> Summary {
    let layout = p.observed.layout();
    Summary {
        arrays: layout.n_arrays(),
        rows: layout.n_rows(),
        cols: layout.n_cols(),
        observed_cells: layout.n_cells(),
        fitted_cells: p.design.layout().n_cells(),
        forecast_cells: p.future.len(),
        partition: config.partition.name().to_string(),
        structure: config.structure.name().to_string(),
        design: match config.design {
            DevelopmentForm::ChainLadder => "chain_ladder",
            DevelopmentForm::Hoerl => "hoerl",
        }
        .to_string(),
    }
}

pub struct Fitted {
    pub fit: FitResult,
    pub names: Vec<String>,
    pub solver: &'static str,
}

fn closed_form_applies(config: &RunConfig, design: &ModelDesign) -> bool {
    config.structure == StructureKind::CellWiseTwoLevel
        && config.partition == PartitionKind::CellWise
        && config.shock_u
        && !config.shock_w
        && design.layout().n_arrays() == 2
}

pub fn fit(config: &RunConfig, p: &Prepared) -> Result<Fitted, CliError> {
    let structure = GammaStructure::for_design(config.structure, &p.design)?;
    let names = structure.component_names();
    let closed = match config.solver {
        Solver::Auto => closed_form_applies(config, &p.design),
        Solver::ClosedForm if closed_form_applies(config, &p.design) => true,
        Solver::ClosedForm => {
            return Err(CliError::Config(
                "solver closed_form needs two arrays, partition cell, shock_u only and structure cellwise_two_level"
                    .into(),
            ))
        }
        Solver::Generic => false,
    };
    if closed {
        let fit = fit_cellwise_closed_form(&p.y, &p.design, config.max_iter)?;
        return Ok(Fitted {
            fit,
            names,
            solver: "closed_form",
        });
    }
    let k = names.len();
    let init = config.init.clone().unwrap_or_else(|| vec![0.01; k]);
    let fixed = config.fixed.clone().unwrap_or_else(|| vec![false; k]);
    if init.len() != k || fixed.len() != k {
        return Err(CliError::Config(format!(
            "init and fixed need {k} entries ({}), got {} and {}",
            names.join(", "),
            init.len(),
            fixed.len()
        )));
    }
    let opts = MlOptions {
        tol: config.tol,
        max_iter: config.max_iter,
        init,
        fixed,
    };
    let fit = ml_dispersion_generic(&p.y, &p.design, &structure.model(), &opts)?;
    Ok(Fitted {
        fit,
        names,
        solver: "generic",
    })
}

fn dispersion(f: &Fitted) -> Vec<Dispersion> {
    let omega = f.fit.omega_hat.clone().unwrap_or_default();
    f.names
        .iter()
        .zip(omega)
        .map(|(name, w)| Dispersion {
            name: name.replacen('2', "", 1),
            variance: w,
            sd: w.max(0.0).sqrt(),
        })
        .collect()
}

fn location(design: &ModelDesign, fit: &FitResult) -> Option<LocationTable> {
    let layout = design.layout();
    let coef = |key| design.index_of(key).map_or(0.0, |k| fit.kappa_hat[k]);
    let has_cols = design.keys().iter().any(|k| matches!(k, ColumnKey::ColEffect { .. }));
    if !has_cols {
        return None;
    }
    let mut row_ratios = Vec::new();
    let mut column_levels = Vec::new();
    for array in 0..layout.n_arrays() {
        let chi1 = coef(ColumnKey::RowEffect { array, row: 1 });
        row_ratios.push(
            (1..=layout.n_rows())
                .map(|row| (coef(ColumnKey::RowEffect { array, row }) - chi1).exp())
                .collect(),
        );
        column_levels.push(
            (1..=layout.n_cols())
                .map(|col| (chi1 + coef(ColumnKey::ColEffect { array, col })).exp())
                .collect(),
        );
    }
    Some(LocationTable {
        row_ratios,
        column_levels,
    })
}

fn dependence(residuals: &[f64]) -> Dependence {
    let half = residuals.len() / 2;
    let (d1, d2) = residuals.split_at(half);
    match dependence_stats(d1, d2) {
        Ok((corr, agree)) => Dependence {
            cells: half,
            correlation: Some(corr),
            sign_agreement: agree,
        },
        Err(_) => Dependence {
            cells: half,
            correlation: None,
            sign_agreement: 0,
        },
    }
}

// residuals ln X - M kappa over every observed cell; None when some cell is not estimable
fn observed_residuals(p: &Prepared, fit: &FitResult) -> Option<Vec<f64>> {
    let cells = p.observed.layout().cells();
    let (m, offsets, _) = p.design.forecast_rows(cells, None).ok()?;
    let fitted = m * &fit.kappa_hat + offsets;
    Some((p.observed.stack_log() - fitted).iter().copied().collect())
}

pub fn fit_report(config: &RunConfig) -> Result<FitReport, CliError> {
    let p = prepare(config)?;
    let f = fit(config, &p)?;
    let labels = p.design.labels();
    let parameters = labels
        .into_iter()
        .enumerate()
        .map(|(k, name)| Parameter {
            name,
            estimate: f.fit.kappa_hat[k],
            se: f.fit.var_kappa[(k, k)].max(0.0).sqrt(),
        })
        .collect();
    let two = p.design.layout().n_arrays() == 2;
    let extra = p.observed.layout().n_cells() > p.design.layout().n_cells();
    Ok(FitReport {
        command: "fit",
        summary: summary(config, &p),
        solver: f.solver,
        iterations: f.fit.iterations,
        loglik: f.fit.loglik,
        dispersion: dispersion(&f),
        location: location(&p.design, &f.fit),
        parameters,
        dependence_fitted: two.then(|| dependence(f.fit.residuals.as_slice())),
        dependence_observed: if two && extra {
            observed_residuals(&p, &f.fit).map(|r| dependence(&r))
        } else {
            None
        },
    })
}

fn reserve_line(label: String, r: &Reserve) -> ReserveLine {
    ReserveLine {
        label,
        mean: r.mean,
        se: r.se,
        cov: r.cov,
    }
}

pub fn forecast_report(config: &RunConfig, counterfactual: bool) -> Result<ForecastReport, CliError> {
    let p = prepare(config)?;
    let f = fit(config, &p)?;
    let omega = f.fit.omega_hat.clone().unwrap_or_default();
    let fd = build_forecast_design(&p.design, config.structure, &omega, &p.future, None)?;
    let result = predict(&f.fit, &fd)?;
    let mut reserves: Vec<ReserveLine> = result
        .reserves
        .iter()
        .enumerate()
        .map(|(n, r)| reserve_line(format!("array {}", n + 1), r))
        .collect();
    reserves.push(reserve_line("total".into(), &result.total));
    let x = result.x_table()?;
    let cells = (0..result.n_arrays())
        .flat_map(|n| {
            let x = &x;
            p.future.iter().map(move |&c| ForecastCell {
                array: n + 1,
                accident: c.row,
                development: c.col,
                mean: x.get(n, c).unwrap_or(0.0),
            })
        })
        .collect();
    Ok(ForecastReport {
        command: "forecast",
        summary: summary(config, &p),
        solver: f.solver,
        dispersion: dispersion(&f),
        reserves,
        correlation: result.reserve_correlation().ok(),
        independence_counterfactual: counterfactual
            .then(|| reserve_line("total (independent arrays)".into(), &result.independence_counterfactual())),
        cells,
    })
}

pub fn inspect_report(config: &RunConfig) -> Result<InspectReport, CliError> {
    let p = prepare(config)?;
    let structure = GammaStructure::for_design(config.structure, &p.design)?;
    let dims = |m: &cshock_core::Matrix| [m.nrows(), m.ncols()];
    Ok(InspectReport {
        command: "inspect",
        summary: summary(config, &p),
        subsets: p.design.partition().n_subsets(),
        design_columns: p.design.unreduced().keys.len(),
        dropped_columns: p.design.dropped().iter().map(ToString::to_string).collect(),
        estimable_columns: p.design.keys().len(),
        a: dims(p.design.a()),
        b: dims(p.design.b()),
        c: dims(&p.design.c()),
        l: dims(&p.design.l()),
        dispersion_components: structure.component_names(),
    })
}

pub fn sim_spec(config: &RunConfig, seed: u64) -> Result<SimSpec, CliError> {
    let s = &config.sim;
    let mut spec = if s.preset.is_some() {
        SimSpec::long_short_tail_pair(seed)
    } else {
        let n = s.row_levels.len();
        if n == 0 || s.col_levels.len() != n {
            return Err(CliError::Config(
                "simulate needs sim_preset or row_levels_<n> and col_levels_<n> for every array".into(),
            ));
        }
        let rows = s.row_levels[0].len();
        let cols = s.col_levels[0].len();
        SimSpec {
            layout: ArrayLayout::rectangle(n, rows, cols)?,
            partition: config.partition,
            row_levels: s.row_levels.clone(),
            col_levels: s.col_levels.clone(),
            shock_mean: 0.0,
            sigma: 0.0,
            v: 0.0,
            seed,
            rounding: Rounding::None,
        }
    };
    spec.partition = config.partition;
    if let Some(x) = s.shock_mean {
        spec.shock_mean = x;
    }
    if let Some(x) = s.sigma {
        spec.sigma = x;
    }
    if let Some(x) = s.v {
        spec.v = x;
    }
    if s.integer {
        spec.rounding = Rounding::Integer;
    }
    if let Some(t) = s.t_max {
        spec.layout = spec.layout.restrict(|c| c.diagonal() <= t)?;
    }
    Ok(spec)
}

/// Simulated claims as `array,accident,development,value` CSV.
pub fn simulate_csv(config: &RunConfig, seed: u64) -> Result<String, CliError> {
    let claims = simulate(&sim_spec(config, seed)?)?;
    let layout = claims.layout();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["array", "accident", "development", "value"]).map_err(io)?;
    for n in 0..layout.n_arrays() {
        for (&c, v) in layout.cells().iter().zip(claims.table().array(n)) {
            w.write_record([(n + 1).to_string(), c.row.to_string(), c.col.to_string(), v.to_string()])
                .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}
