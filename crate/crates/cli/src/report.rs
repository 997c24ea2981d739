//! Report records (serialized as JSON) and their text rendering.

use std::fmt::Write as _;

use serde::Serialize;

/// Rounds to four significant figures and prints without exponent.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(3 - e);
    let r = (x * scale).round() / scale;
    // rounding can carry into the next decade (9.9996 -> 10.00)
    let e = r.abs().log10().floor() as i32;
    format!("{r:.*}", (3 - e).max(0) as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub arrays: usize,
    pub rows: usize,
    pub cols: usize,
    pub observed_cells: usize,
    pub fitted_cells: usize,
    pub forecast_cells: usize,
    pub partition: String,
    pub structure: String,
    pub design: String,
}

impl Summary {
    fn render(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "arrays {}  grid {} x {}  observed {}  fitted {}  forecast {}",
            self.arrays, self.rows, self.cols, self.observed_cells, self.fitted_cells, self.forecast_cells
        );
        let _ = writeln!(
            out,
            "partition {}  structure {}  design {}",
            self.partition, self.structure, self.design
        );
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Parameter {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
}

/// Chain-ladder parameters in multiplicative form, one column per array.
#[derive(Debug, Clone, Serialize)]
pub struct LocationTable {
    /// `exp(chi_i - chi_1)` as `[array][row - 1]`.
    pub row_ratios: Vec<Vec<f64>>,
    /// `exp(chi_1 + rho_j)` as `[array][col - 1]`.
    pub column_levels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dispersion {
    pub name: String,
    pub variance: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dependence {
    pub cells: usize,
    pub correlation: Option<f64>,
    pub sign_agreement: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub command: &'static str,
    pub summary: Summary,
    pub solver: &'static str,
    pub iterations: usize,
    pub loglik: f64,
    pub dispersion: Vec<Dispersion>,
    pub location: Option<LocationTable>,
    pub parameters: Vec<Parameter>,
    /// Residual dependence over the fitted cells.
    pub dependence_fitted: Option<Dependence>,
    /// Residual dependence over every observed cell, when more cells are observed than fitted.
    pub dependence_observed: Option<Dependence>,
}

fn render_dependence(out: &mut String, label: &str, d: &Dependence) {
    let corr = d.correlation.map_or("n/a".to_string(), |c| format!("{c:.4}"));
    let _ = writeln!(
        out,
        "  {label:<10} corr {corr}  sign agreement {}/{}",
        d.sign_agreement, d.cells
    );
}

impl FitReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.summary.render(&mut out);
        let _ = writeln!(
            out,
            "solver {}  iterations {}  loglik {:.4}",
            self.solver, self.iterations, self.loglik
        );
        out.push_str("\ndispersion\n");
        for d in &self.dispersion {
            let _ = writeln!(out, "  {:<10} {:>10}  (variance {})", d.name, sig4(d.sd), sig4(d.variance));
        }
        if let Some(loc) = &self.location {
            let n = loc.row_ratios.len();
            out.push_str("\nlocation\n");
            let mut head = String::from("           ");
            for a in 1..=n {
                let _ = write!(head, " {:>12}", format!("array {a}"));
            }
            let _ = writeln!(out, "{head}");
            for (label, table) in [("row", &loc.row_ratios), ("col", &loc.column_levels)] {
                let len = table.first().map_or(0, Vec::len);
                for k in 0..len {
                    let _ = write!(out, "  {label} {:>4}  ", k + 1);
                    for col in table.iter() {
                        let _ = write!(out, " {:>12}", sig4(col[k]));
                    }
                    out.push('\n');
                }
            }
        } else {
            out.push_str("\nparameters\n");
            for p in &self.parameters {
                let _ = writeln!(out, "  {:<18} {:>12}  se {}", p.name, sig4(p.estimate), sig4(p.se));
            }
        }
        if self.dependence_fitted.is_some() || self.dependence_observed.is_some() {
            out.push_str("\nresidual dependence\n");
            if let Some(d) = &self.dependence_fitted {
                render_dependence(&mut out, "fitted", d);
            }
            if let Some(d) = &self.dependence_observed {
                render_dependence(&mut out, "observed", d);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReserveLine {
    pub label: String,
    pub mean: f64,
    pub se: f64,
    pub cov: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastCell {
    pub array: usize,
    pub accident: usize,
    pub development: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastReport {
    pub command: &'static str,
    pub summary: Summary,
    pub solver: &'static str,
    pub dispersion: Vec<Dispersion>,
    /// One line per array, then the total.
    pub reserves: Vec<ReserveLine>,
    pub correlation: Option<f64>,
    /// Total with the cross-array covariance blocks set to zero.
    pub independence_counterfactual: Option<ReserveLine>,
    pub cells: Vec<ForecastCell>,
}

fn render_reserve(out: &mut String, r: &ReserveLine) {
    let _ = writeln!(
        out,
        "  {:<26} {:>12.0} {:>10.0} {:>7.1}",
        r.label,
        r.mean,
        r.se,
        100.0 * r.cov
    );
}

impl ForecastReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.summary.render(&mut out);
        let disp: Vec<String> = self.dispersion.iter().map(|d| format!("{} {}", d.name, sig4(d.sd))).collect();
        let _ = writeln!(out, "solver {}  {}", self.solver, disp.join("  "));
        let _ = writeln!(out, "\n  {:<26} {:>12} {:>10} {:>7}", "reserve", "mean", "se", "cov %");
        for r in &self.reserves {
            render_reserve(&mut out, r);
        }
        if let Some(r) = &self.independence_counterfactual {
            render_reserve(&mut out, r);
        }
        if let Some(c) = self.correlation {
            let _ = writeln!(out, "\nreserve correlation {c:.4}");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InspectReport {
    pub command: &'static str,
    pub summary: Summary,
    pub subsets: usize,
    pub design_columns: usize,
    pub dropped_columns: Vec<String>,
    pub estimable_columns: usize,
    /// `[rows, cols]` of `A`, `B`, `C` and `L`.
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub c: [usize; 2],
    pub l: [usize; 2],
    pub dispersion_components: Vec<String>,
}

impl InspectReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.summary.render(&mut out);
        let _ = writeln!(out, "subsets {}", self.subsets);
        let _ = writeln!(
            out,
            "design columns {}  estimable {}  dropped [{}]",
            self.design_columns,
            self.estimable_columns,
            self.dropped_columns.join(", ")
        );
        for (name, d) in [("A", self.a), ("B", self.b), ("C", self.c), ("L", self.l)] {
            let _ = writeln!(out, "  {name} {} x {}", d[0], d[1]);
        }
        let _ = writeln!(out, "dispersion components [{}]", self.dispersion_components.join(", "));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::sig4;

    #[test]
    fn four_significant_figures() {
        assert_eq!(sig4(248.0), "248.0");
        assert_eq!(sig4(3569.94), "3570");
        assert_eq!(sig4(14398.8), "14400");
        assert_eq!(sig4(0.92134), "0.9213");
        assert_eq!(sig4(0.089272), "0.08927");
        assert_eq!(sig4(9.99996), "10.00");
        assert_eq!(sig4(-1.5), "-1.500");
        assert_eq!(sig4(0.0), "0");
    }
}
