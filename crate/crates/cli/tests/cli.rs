//! End-to-end tests of the binary: exit codes, golden outputs, and the
//! bundled fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

fn tradediff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradediff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn validate_bundled_economy_is_clean() {
    let economy = data("toy/economy.json");
    let output = tradediff(&["validate", "--economy", economy.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(stdout(&output).contains("0 violations"));
}

#[test]
fn validate_reports_violations_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    let mut economy: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("toy/economy.json")).unwrap()).unwrap();
    economy["kappa"][0][0] = serde_json::json!(0.9);
    std::fs::write(&path, serde_json::to_string(&economy).unwrap()).unwrap();
    let output = tradediff(&["validate", "--economy", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1), "{output:?}");
    assert!(String::from_utf8_lossy(&output.stderr).contains("kappa"));
}

#[test]
fn missing_scenario_file_is_a_usage_error() {
    let economy = data("toy/economy.json");
    let output = tradediff(&[
        "scenario",
        "run",
        "--economy",
        economy.to_str().unwrap(),
        "--scenario",
        "no_such_scenario.json",
    ]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    assert!(String::from_utf8_lossy(&output.stderr).contains("does not exist"));
}

#[test]
fn bad_subcommand_usage_exits_two() {
    let output = tradediff(&["simulate"]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let help = tradediff(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in [
        "validate",
        "calibrate",
        "calibrate-beta",
        "simulate",
        "scenario",
        "analyze-diffusion",
        "report",
    ] {
        assert!(stdout(&help).contains(sub), "help lists {sub}");
    }
}

#[test]
fn simulate_then_report_matches_golden() {
    let run_dir = tempfile::tempdir().unwrap();
    let economy = data("toy/economy.json");
    let output = tradediff(&[
        "simulate",
        "--economy",
        economy.to_str().unwrap(),
        "--horizon",
        "20",
        "--out",
        run_dir.path().to_str().unwrap(),
        "--dump-grids",
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let shares = std::fs::read_to_string(run_dir.path().join("pi.csv")).unwrap();
    assert!(shares.starts_with("period,source,dest,sector,value\n"));
    assert_eq!(shares.lines().count(), 1 + 20 * 4 * 4 * 3);
    assert!(run_dir.path().join("expenditure.csv").exists());

    let table = run_dir.path().join("real_income.csv");
    let output = tradediff(&[
        "report",
        "--run",
        run_dir.path().to_str().unwrap(),
        "--var",
        "real_income",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let got = std::fs::read(&table).unwrap();
    let golden = std::fs::read(data("golden/toy_real_income.csv")).unwrap();
    assert_eq!(
        got, golden,
        "regions-by-periods table drifted from the golden file"
    );
}

#[test]
fn full_decouple_preset_matches_golden_report() {
    let out_dir = tempfile::tempdir().unwrap();
    let output = tradediff(&[
        "scenario",
        "run",
        "--economy",
        data("toy/economy.json").to_str().unwrap(),
        "--scenario",
        data("presets/full_decouple.json").to_str().unwrap(),
        "--diffusion",
        "on",
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let got = std::fs::read(out_dir.path().join("report.csv")).unwrap();
    let golden = std::fs::read(data("golden/toy_full_decouple_report.csv")).unwrap();
    assert_eq!(got, golden, "welfare table drifted from the golden file");
}

#[test]
fn calibrate_reproduces_bundled_economy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("economy.json");
    let output = tradediff(&[
        "calibrate",
        "--flows",
        data("toy/flows").to_str().unwrap(),
        "--params",
        data("toy/params.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(data("toy/economy.json")).unwrap(),
        "calibration output drifted from the bundled economy"
    );
}

#[test]
fn calibrate_beta_sweep_runs_and_reports_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("sweep.csv");
    let output = tradediff(&[
        "calibrate-beta",
        "--economy",
        data("toy/economy.json").to_str().unwrap(),
        "--historical",
        data("historical/gdp.csv").to_str().unwrap(),
        "--grid",
        "0.40:0.48:0.04",
        "--weight",
        "0.5",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(stdout(&output).contains("minimum at beta ="));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 4, "header plus three grid rows");
}

#[test]
fn analyze_diffusion_operations() {
    let problem = data("diffusion/two_by_two.json");
    let optimal = tradediff(&[
        "analyze-diffusion",
        "--problem",
        problem.to_str().unwrap(),
        "--op",
        "optimal",
    ]);
    assert_eq!(optimal.status.code(), Some(0), "{optimal:?}");
    let shares: Vec<Vec<f64>> = serde_json::from_str(&stdout(&optimal)).unwrap();
    assert!((shares[0][0] - 1.0 / 1.7).abs() < 1e-12);

    let aleph = tradediff(&[
        "analyze-diffusion",
        "--problem",
        problem.to_str().unwrap(),
        "--op",
        "aleph",
        "--sources",
        "0,0",
        "--sectors",
        "0,1",
    ]);
    assert_eq!(aleph.status.code(), Some(0), "{aleph:?}");
    let value: f64 = stdout(&aleph).trim().parse().unwrap();
    assert!(value.is_finite() && value > 0.0);

    let out_dir = tempfile::tempdir().unwrap();
    let surface = tradediff(&[
        "analyze-diffusion",
        "--problem",
        problem.to_str().unwrap(),
        "--op",
        "surface",
        "--resolution",
        "21",
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(surface.status.code(), Some(0), "{surface:?}");
    let csv = std::fs::read_to_string(out_dir.path().join("surface.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 21 * 21);
    assert!(out_dir.path().join("points.json").exists());
}

#[test]
fn assign_blocs_separates_anchors() {
    let output = tradediff(&[
        "assign-blocs",
        "--votes",
        data("votes/sample.csv").to_str().unwrap(),
        "--west",
        "usa",
        "--east",
        "chn",
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let text = stdout(&output);
    assert!(text.contains("usa: +1.0000 -> West"), "{text}");
    assert!(text.contains("chn: -1.0000 -> East"), "{text}");
    assert!(text.contains("e27") && text.contains("rus"));
}
