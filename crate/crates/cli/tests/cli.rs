use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn cshock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cshock")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.conf");
    std::fs::write(&path, body).unwrap();
    path
}

fn data_line() -> String {
    let f = fixtures();
    format!(
        "data = {}, {}\n",
        f.join("data_set_1.csv").display(),
        f.join("data_set_2.csv").display()
    )
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_fixture_reports_dispersion_and_location() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("fit.json");
    let conf = fixtures().join("two_arrays.conf");
    let o = cshock(&["fit", "--config", conf.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("sigma         0.08927"), "{text}");
    assert!(text.contains("residual dependence"), "{text}");

    let v = read_json(&json);
    assert_eq!(v["command"], "fit");
    assert_eq!(v["summary"]["fitted_cells"], 120);
    assert_eq!(v["summary"]["forecast_cells"], 105);
    assert_eq!(v["parameters"].as_array().unwrap().len(), 58);
    let sd: Vec<f64> = v["dispersion"].as_array().unwrap().iter().map(|d| d["sd"].as_f64().unwrap()).collect();
    assert!((sd[0] - 0.0893).abs() < 5e-4 && (sd[1] - 0.1237).abs() < 5e-4, "{sd:?}");
    let rows = &v["location"]["row_ratios"][0];
    assert_eq!(rows[0].as_f64().unwrap(), 1.0);
    assert!((rows[1].as_f64().unwrap() - 0.921).abs() < 0.002);
    assert_eq!(v["dependence_fitted"]["cells"], 120);
    assert_eq!(v["dependence_observed"]["cells"], 225);
}

#[test]
fn forecast_fixture_with_counterfactual() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("forecast.json");
    let conf = fixtures().join("two_arrays.conf");
    let o = cshock(&[
        "forecast",
        "--config",
        conf.to_str().unwrap(),
        "--independence-counterfactual",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("total (independent arrays)"));

    let v = read_json(&json);
    let reserves = v["reserves"].as_array().unwrap();
    assert_eq!(reserves.len(), 3);
    let mean = |k: usize| reserves[k]["mean"].as_f64().unwrap();
    assert!((mean(0) + mean(1) - mean(2)).abs() < 1e-6 * mean(2));
    let cf = &v["independence_counterfactual"];
    assert_eq!(cf["mean"].as_f64().unwrap(), mean(2));
    // positive correlation: the independent total is less uncertain
    assert!(cf["se"].as_f64().unwrap() < reserves[2]["se"].as_f64().unwrap());
    assert!(v["correlation"].as_f64().unwrap() > 0.0);
    assert_eq!(v["cells"].as_array().unwrap().len(), 210);

    let plain = cshock(&["forecast", "--config", conf.to_str().unwrap()]);
    assert!(!stdout(&plain).contains("independent arrays"));
}

#[test]
fn zero_future_region_gives_zero_reserves() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("f.json");
    let conf = config(&dir, &data_line());
    let o = cshock(&["forecast", "--config", conf.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&json);
    assert_eq!(v["summary"]["forecast_cells"], 0);
    for r in v["reserves"].as_array().unwrap() {
        assert_eq!(r["mean"].as_f64().unwrap(), 0.0);
        assert_eq!(r["se"].as_f64().unwrap(), 0.0);
    }
    assert!(v["correlation"].is_null());
}

#[test]
fn forecast_mask_selects_cells() {
    let dir = TempDir::new().unwrap();
    let mask = dir.path().join("mask.csv");
    std::fs::write(&mask, "accident,development\n15,15\n14,15\n").unwrap();
    let json = dir.path().join("f.json");
    let conf = config(&dir, &format!("{}forecast_mask = mask.csv\n", data_line()));
    let o = cshock(&["forecast", "--config", conf.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&json);
    assert_eq!(v["summary"]["fitted_cells"], 223);
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn generic_solver_agrees_with_closed_form() {
    let dir = TempDir::new().unwrap();
    let run = |solver: &str| {
        let json = dir.path().join(format!("{solver}.json"));
        let conf = config(&dir, &format!("{}t_max = 15\nsolver = {solver}\ntol = 1e-10\n", data_line()));
        let o = cshock(&["fit", "--config", conf.to_str().unwrap(), "--out", json.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        read_json(&json)
    };
    let (a, b) = (run("closed_form"), run("generic"));
    assert_eq!(b["solver"], "generic");
    for k in 0..2 {
        let (x, y) = (
            a["dispersion"][k]["variance"].as_f64().unwrap(),
            b["dispersion"][k]["variance"].as_f64().unwrap(),
        );
        assert!((x - y).abs() < 1e-6 * x.abs(), "{x} vs {y}");
    }
}

#[test]
fn inspect_reports_dimensions() {
    let conf = fixtures().join("two_arrays.conf");
    let o = cshock(&["inspect", "--config", conf.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("A 240 x 120"), "{text}");
    assert!(text.contains("estimable 58"), "{text}");
    assert!(text.contains("dropped [xi]"), "{text}");
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let conf = fixtures().join("simulate.conf");
    let c = conf.to_str().unwrap();
    let a = stdout(&cshock(&["simulate", "--config", c, "--seed", "11"]));
    let b = stdout(&cshock(&["simulate", "--config", c, "--seed", "11"]));
    let other = stdout(&cshock(&["simulate", "--config", c, "--seed", "12"]));
    assert_eq!(a, b);
    assert_ne!(a, other);
    assert_eq!(a.lines().count(), 1 + 2 * 225);
    assert!(a.starts_with("array,accident,development,value\n"));
}

#[test]
fn simulated_csv_round_trips_through_fit() {
    let dir = TempDir::new().unwrap();
    let sim = config(
        &dir,
        "sim_preset = long_short_tail\nsim_rounding = integer\nsim_t_max = 15\n",
    );
    let csv = dir.path().join("sim.csv");
    let o = cshock(&["simulate", "--config", sim.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 120);
    assert!(text.lines().skip(1).all(|l| !l.rsplit(',').next().unwrap().contains('.')));

    let fit = config(&dir, &format!("data = {}\nrows = 15\ncols = 15\n", csv.display()));
    let o = cshock(&["forecast", "--config", fit.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("forecast 105"));
}

#[test]
fn unknown_partition_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let conf = config(&dir, &format!("{}partition = block\n", data_line()));
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("array, cell, row, column, diagonal"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_a_config_error() {
    let o = cshock(&["fit", "--config", "/nonexistent/run.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_data_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "array,accident,development,value\n").unwrap();
    let conf = config(&dir, "data = empty.csv\n");
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no claim rows"), "{}", stderr(&o));
}

#[test]
fn bad_values_report_their_line() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "array,accident,development,value\n1,1,1,10\n1,1,2,-3\n").unwrap();
    let conf = config(&dir, "data = bad.csv\n");
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));

    std::fs::write(&bad, "array,accident,development,value\n1,1,1,ten\n").unwrap();
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn incongruent_arrays_are_rejected() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d.csv");
    std::fs::write(&d, "array,accident,development,value\n1,1,1,10\n1,1,2,5\n2,1,1,7\n").unwrap();
    let conf = config(&dir, "data = d.csv\n");
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not congruent"), "{}", stderr(&o));
}

#[test]
fn closed_form_on_wrong_structure_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let conf = config(
        &dir,
        &format!("{}t_max = 15\nstructure = example48\nsolver = closed_form\n", data_line()),
    );
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_arrays_are_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d.csv");
    let mut body = String::from("array,accident,development,value\n");
    for n in 1..=2 {
        for i in 1..=4 {
            for j in 1..=(5 - i) {
                body.push_str(&format!("{n},{i},{j},{}\n", 100 + 7 * i * i + 13 * j + (i * j) % 5));
            }
        }
    }
    std::fs::write(&d, body).unwrap();
    let conf = config(&dir, "data = d.csv\n");
    let o = cshock(&["fit", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
