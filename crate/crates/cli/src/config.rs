//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma-separated.
//! Relative paths are resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cshock_core::{DevelopmentForm, PartitionKind, StructureKind};

use crate::CliError;

pub const KEYS: &[&str] = &[
    "data",
    "rows",
    "cols",
    "t_max",
    "forecast_mask",
    "partition",
    "design",
    "shock_u",
    "shock_w",
    "structure",
    "solver",
    "init",
    "fixed",
    "tol",
    "max_iter",
    "out",
    "seed",
    "sim_preset",
    "sim_t_max",
    "sim_shock_mean",
    "sim_sigma",
    "sim_v",
    "sim_rounding",
];

// per-array simulation surfaces: row_levels_1, col_levels_1, ...
const INDEXED: &[&str] = &["row_levels_", "col_levels_"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Closed form for `cellwise_two_level`, generic otherwise.
    Auto,
    ClosedForm,
    Generic,
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "closed_form" => Ok(Self::ClosedForm),
            "generic" => Ok(Self::Generic),
            _ => Err("auto, closed_form, generic".into()),
        }
    }
}

/// Where the forecast region comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Fit cells with `t <= t_max`, forecast the rest of the grid.
    TMax(usize),
    /// Forecast the listed cells, fit every observed cell outside them.
    Mask(PathBuf),
    /// Fit every observed cell, forecast the unobserved rest of the grid.
    Unobserved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub preset: Option<String>,
    pub t_max: Option<usize>,
    pub row_levels: Vec<Vec<f64>>,
    pub col_levels: Vec<Vec<f64>>,
    pub shock_mean: Option<f64>,
    pub sigma: Option<f64>,
    pub v: Option<f64>,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Vec<PathBuf>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub region: Region,
    pub partition: PartitionKind,
    pub design: DevelopmentForm,
    pub shock_u: bool,
    pub shock_w: bool,
    pub structure: StructureKind,
    pub solver: Solver,
    pub init: Option<Vec<f64>>,
    pub fixed: Option<Vec<bool>>,
    pub tol: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub sim: SimConfig,
}

struct Entry {
    line: usize,
    value: String,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
    base: PathBuf,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

impl Raw {
    fn parse(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected 'key = value', got '{trimmed}'")))?;
            let key = key.trim().to_string();
            let known = KEYS.contains(&key.as_str())
                || INDEXED
                    .iter()
                    .any(|p| key.strip_prefix(p).is_some_and(|n| n.parse::<usize>().is_ok_and(|n| n >= 1)));
            if !known {
                return Err(bad(
                    line,
                    format!("unknown key '{key}'; valid keys: {}, row_levels_<n>, col_levels_<n>", KEYS.join(", ")),
                ));
            }
            let value = value.trim().to_string();
            if let Some(prev) = entries.insert(key.clone(), Entry { line, value }) {
                return Err(bad(line, format!("'{key}' already set on line {}", prev.line)));
            }
        }
        Ok(Self { entries, base })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| bad(e.line, format!("invalid value '{}' for {key}: {err}", e.value))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|err| bad(e.line, format!("invalid entry '{}' in {key}: {err}", s.trim())))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn path(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        if p.is_absolute() {
            p
        } else {
            self.base.join(p)
        }
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn indexed(&self, prefix: &str) -> Result<Vec<Vec<f64>>, CliError> {
        let mut out = Vec::new();
        for n in 1.. {
            match self.list(&format!("{prefix}{n}"))? {
                Some(v) => out.push(v),
                None => break,
            }
        }
        if let Some(key) = self
            .entries
            .keys()
            .filter(|k| k.starts_with(prefix))
            .find(|k| k[prefix.len()..].parse::<usize>().is_ok_and(|n| n > out.len()))
        {
            return Err(bad(self.line(key), format!("'{key}' without all lower-numbered arrays")));
        }
        Ok(out)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let raw = Raw::parse(text, base)?;
        let data = match raw.entries.get("data") {
            None => Vec::new(),
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| raw.path(s))
                .collect(),
        };
        let t_max: Option<usize> = raw.get("t_max")?;
        let mask: Option<String> = raw.get("forecast_mask")?;
        let region = match (t_max, mask) {
            (Some(_), Some(_)) => {
                return Err(bad(raw.line("forecast_mask"), "set either t_max or forecast_mask, not both"));
            }
            (Some(0), None) => return Err(bad(raw.line("t_max"), "t_max must be >= 1")),
            (Some(t), None) => Region::TMax(t),
            (None, Some(m)) => Region::Mask(raw.path(&m)),
            (None, None) => Region::Unobserved,
        };
        let tol: f64 = raw.get_or("tol", 1e-9)?;
        if !(tol > 0.0) {
            return Err(bad(raw.line("tol"), "tol must be > 0"));
        }
        let sim = SimConfig {
            preset: raw.get("sim_preset")?,
            t_max: raw.get("sim_t_max")?,
            row_levels: raw.indexed("row_levels_")?,
            col_levels: raw.indexed("col_levels_")?,
            shock_mean: raw.get("sim_shock_mean")?,
            sigma: raw.get("sim_sigma")?,
            v: raw.get("sim_v")?,
            integer: match raw.get::<String>("sim_rounding")?.as_deref() {
                None | Some("none") => false,
                Some("integer") => true,
                Some(other) => {
                    return Err(bad(
                        raw.line("sim_rounding"),
                        format!("unknown rounding '{other}'; expected one of: none, integer"),
                    ))
                }
            },
        };
        if let Some(p) = &sim.preset {
            if p != "long_short_tail" {
                return Err(bad(
                    raw.line("sim_preset"),
                    format!("unknown preset '{p}'; expected one of: long_short_tail"),
                ));
            }
        }
        Ok(Self {
            data,
            rows: raw.get("rows")?,
            cols: raw.get("cols")?,
            region,
            partition: raw.get_or("partition", PartitionKind::CellWise)?,
            design: raw.get_or("design", DevelopmentForm::ChainLadder)?,
            shock_u: raw.get_or("shock_u", true)?,
            shock_w: raw.get_or("shock_w", false)?,
            structure: raw.get_or("structure", StructureKind::CellWiseTwoLevel)?,
            solver: raw.get_or("solver", Solver::Auto)?,
            init: raw.list("init")?,
            fixed: raw.list("fixed")?,
            tol,
            max_iter: raw.get_or("max_iter", 200)?,
            out: raw.get::<String>("out")?.map(|p| raw.path(&p)),
            seed: raw.get_or("seed", 0)?,
            sim,
        })
    }
}
