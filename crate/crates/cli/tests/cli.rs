//! End-to-end tests of the command-line interface: exit codes, output
//! formats, reproducibility, and the config-file round trip.

#![allow(clippy::excessive_precision)] // frozen 50-digit oracle values

use std::collections::HashMap;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kds-ringdown"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// First CSV row as a column -> cell map (no quoted cells are produced by
/// the numeric tables this parses).
fn csv_row(stdout: &str) -> HashMap<String, String> {
    let mut lines = stdout.lines();
    let headers: Vec<&str> = lines.next().unwrap().split(',').collect();
    let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
    headers
        .iter()
        .zip(cells)
        .map(|(h, c)| (h.to_string(), c.to_string()))
        .collect()
}

fn get(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn coeffs_values_and_cell_round_trip() {
    let (code, stdout, _) = run(&["coeffs", "--M", "1", "--Lambda", "0.04"]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert!((get(&row, "omega_ph") - 0.15396007178390020).abs() < 1e-14);
    assert!((get(&row, "c_z") - 0.087407407407407407).abs() < 1e-14);
    assert!((get(&row, "c_omega2") - 0.040984741331362323).abs() < 1e-13);
    assert!((get(&row, "c_lambda2") + 0.0017819452752766227).abs() < 1e-14);
    assert!((get(&row, "b1") + 3.6875).abs() < 1e-14);

    // Every numeric cell reparses and reformats to the identical string.
    for (key, cell) in &row {
        if key == "m" || cell.parse::<f64>().is_err() {
            continue;
        }
        let value: f64 = cell.parse().unwrap();
        assert_eq!(&format!("{value:.16e}"), cell, "column {key}");
    }
}

#[test]
fn horizons_values_and_domain_error() {
    let (code, stdout, _) = run(&["horizons", "--M", "1", "--a", "0", "--Lambda", "0.04"]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert!((get(&row, "r_e") - 2.1285927458325954).abs() < 1e-12);
    assert!((get(&row, "r_c") - 7.3974894723879688).abs() < 1e-12);

    // 9 Lambda M^2 = 1.8: not subextremal, domain error, exit code 2.
    let (code, _, stderr) = run(&["horizons", "--M", "1", "--a", "0", "--Lambda", "0.2"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("not subextremal"), "{stderr}");
}

#[test]
fn orbit_counter_branch_and_admissibility_diagnostic() {
    let (code, stdout, _) = run(&[
        "orbit", "--M", "1", "--a", "0.05", "--Lambda", "0.04", "--branch", "counter",
    ]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert!((get(&row, "omega") + 0.14968917874776099).abs() < 1e-12);
    assert!(get(&row, "b") < 0.0);

    // The admissibility check names the first failed condition.
    let (code, _, stderr) = run(&[
        "orbit", "--M", "1", "--a", "0", "--Lambda", "0.112", "--branch", "co",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("9 Lambda M^2 >= 1"), "{stderr}");
}

#[test]
fn kerr_limit_reports_sentinel() {
    let (code, stdout, _) = run(&["horizons", "--M", "1", "--a", "0.3", "--Lambda", "0"]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert_eq!(row["missing_cosmological_horizon"], "true");
    assert_eq!(row["r_c"], "inf");
    assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, _) = run(&["coeffs", "--M", "1"]); // missing --Lambda
    assert_eq!(code, 1);
    let (code, _, _) = run(&["coeffs", "--M", "1", "--Lambda", "0.04", "--bogus", "2"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&[
        "orbit", "--M", "1", "--Lambda", "0.04", "--branch", "sideways",
    ]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&[]);
    assert_eq!(code, 1);
}

#[test]
fn help_exits_zero() {
    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn forward_then_invert_round_trip() {
    let (code, stdout, _) = run(&[
        "forward", "--M", "1", "--a", "0.05", "--Lambda", "0.04", "--ell", "100",
    ]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    let (u, v) = (row["u"].clone(), row["v"].clone());

    let (code, stdout, _) = run(&[
        "invert", "--U", &u, "--V", &v, "--Lambda", "0.04", "--ell", "100", "--n", "0",
    ]);
    assert_eq!(code, 0);
    let rec = csv_row(&stdout);
    assert!((get(&rec, "m") - 1.0).abs() < 1e-10, "{stdout}");
    assert!((get(&rec, "a") - 0.05).abs() < 1e-10);
    assert_eq!(rec["spin_sign_ambiguous"], "false");

    // The implicit-function-theorem Jacobian route agrees.
    let (code, stdout, _) = run(&[
        "invert",
        "--U",
        &u,
        "--V",
        &v,
        "--Lambda",
        "0.04",
        "--ell",
        "100",
        "--jacobian",
        "analytic",
    ]);
    assert_eq!(code, 0);
    let rec = csv_row(&stdout);
    assert!((get(&rec, "m") - 1.0).abs() < 1e-10);
    assert!((get(&rec, "a") - 0.05).abs() < 1e-10);
}

#[test]
fn invert_identity_case() {
    // Passing the non-rotating orbital frequency as U recovers the axis;
    // the finite-ell normalization keeps the mass within O(1/ell) of 1.
    let (code, stdout, _) = run(&[
        "invert",
        "--U",
        "0.1539601",
        "--V",
        "0",
        "--Lambda",
        "0.04",
        "--ell",
        "100",
        "--n",
        "0",
    ]);
    assert_eq!(code, 0);
    let rec = csv_row(&stdout);
    assert_eq!(get(&rec, "a"), 0.0);
    assert!((get(&rec, "m") - 1.0).abs() < 5e-3);
}

#[test]
fn invert_unlabeled_flag() {
    let (_, stdout, _) = run(&[
        "forward", "--M", "1", "--a", "-0.05", "--Lambda", "0.04", "--ell", "100",
    ]);
    let row = csv_row(&stdout);
    let abs_v = row["abs_v"].clone();
    let u = row["u"].clone();
    let (code, stdout, _) = run(&[
        "invert",
        "--unlabeled",
        "--U",
        &u,
        "--V",
        &abs_v,
        "--Lambda",
        "0.04",
        "--ell",
        "100",
    ]);
    assert_eq!(code, 0);
    let rec = csv_row(&stdout);
    assert!((get(&rec, "a") - 0.05).abs() < 1e-10);
    assert_eq!(rec["spin_sign_ambiguous"], "true");
}

#[test]
fn invert3_round_trip() {
    let (_, stdout, _) = run(&[
        "forward", "--M", "1", "--a", "0.2", "--Lambda", "0.04", "--ell", "200",
    ]);
    let row = csv_row(&stdout);
    let (u, v, w) = (row["u"].clone(), row["v"].clone(), row["w_tilde"].clone());
    let (code, stdout, _) = run(&[
        "invert3", "--U", &u, "--V", &v, "--W", &w, "--ell", "200", "--n", "0",
    ]);
    assert_eq!(code, 0);
    let rec = csv_row(&stdout);
    assert!((get(&rec, "m") - 1.0).abs() < 1e-8);
    assert!((get(&rec, "a") - 0.2).abs() < 1e-8);
    assert!((get(&rec, "lambda") - 0.04).abs() < 1e-8);
}

#[test]
fn scan_pmatrix_summary_and_per_node() {
    let base = [
        "scan-pmatrix",
        "--M-min",
        "0.95",
        "--M-max",
        "1.05",
        "--a-min",
        "-0.05",
        "--a-max",
        "0.05",
        "--grid-M",
        "3",
        "--grid-a",
        "3",
        "--Lambda",
        "0.04",
        "--ell",
        "100",
    ];
    let (code, stdout, _) = run(&base);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert_eq!(row["pass"], "true");
    assert_eq!(row["nodes_evaluated"], "9");
    assert_eq!(row["collisions"], "0");

    let mut with_nodes: Vec<&str> = base.to_vec();
    with_nodes.push("--per-node");
    let (code, stdout, _) = run(&with_nodes);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 10); // header + 9 nodes
}

#[test]
fn verify_series_rows() {
    let (code, stdout, _) = run(&[
        "verify-series",
        "--quantity",
        "lambda_plus",
        "--M",
        "1",
        "--Lambda",
        "0.04",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 6); // header + orders 0..=4
    let row = csv_row(&stdout); // order 0
    assert!((get(&row, "coefficient") - 0.15396007178390020).abs() < 1e-9);

    let (code, _, _) = run(&[
        "verify-series",
        "--quantity",
        "nonsense",
        "--M",
        "1",
        "--Lambda",
        "0.04",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn noise_study_runs_are_byte_identical() {
    let args = [
        "noise-study",
        "--M",
        "1",
        "--a",
        "0.05",
        "--Lambda",
        "0.04",
        "--ells",
        "100,200",
        "--eps",
        "1e-3,1e-2",
        "--trials",
        "8",
        "--seed",
        "7",
    ];
    let (code_a, out_a, _) = run(&args);
    let (code_b, out_b, _) = run(&args);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(out_a, out_b);
    assert_eq!(out_a.lines().count(), 5); // header + 4 cells
}

#[test]
fn noise_study_json_renders_nan_as_null() {
    let (code, stdout, _) = run(&[
        "noise-study",
        "--M",
        "1",
        "--a",
        "0.05",
        "--Lambda",
        "0.04",
        "--ells",
        "100",
        "--eps",
        "0",
        "--trials",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("\"error_ell_over_eps\": null"), "{stdout}");
}

#[test]
fn json_output_mirrors_csv_columns() {
    let (code, stdout, _) = run(&["coeffs", "--M", "1", "--Lambda", "0.04", "--format", "json"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("[\n  {\"m\": "));
    assert!(stdout.contains("\"omega_ph\": 1.5396007178390020e-1"));
    assert!(stdout.trim_end().ends_with("]"));

    let (code, _, _) = run(&["coeffs", "--M", "1", "--Lambda", "0.04", "--format", "yaml"]);
    assert_eq!(code, 1);
}

#[test]
fn config_file_drives_a_run_and_flags_override() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("kdsr-cfg-{}.cfg", std::process::id()));
    std::fs::write(
        &path,
        "command = coeffs\nM = 1.0\nLambda = 0.04\nformat = csv\n",
    )
    .unwrap();
    let path_str = path.to_str().unwrap();

    let (code, stdout, _) = run(&["--config", path_str]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert!((get(&row, "omega_ph") - 0.15396007178390020).abs() < 1e-14);

    // A flag overrides the file value.
    let (code, stdout, _) = run(&["coeffs", "--Lambda", "0", "--config", path_str]);
    assert_eq!(code, 0);
    let row = csv_row(&stdout);
    assert!((get(&row, "omega_ph") - 0.19245008972987526).abs() < 1e-14);

    std::fs::remove_file(&path).unwrap();
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("kdsr-bad-{}.cfg", std::process::id()));
    std::fs::write(&path, "command = coeffs\nMass = 1.0\n").unwrap();
    let (code, _, stderr) = run(&["--config", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown config key"), "{stderr}");
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("kdsr-out-{}.csv", std::process::id()));
    let (code, stdout, _) = run(&[
        "coeffs",
        "--M",
        "1",
        "--Lambda",
        "0.04",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("m,lambda,omega_ph"));
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn forward_noise_flags_shift_observables() {
    let (_, clean, _) = run(&[
        "forward", "--M", "1", "--a", "0", "--Lambda", "0.04", "--ell", "100",
    ]);
    let clean = csv_row(&clean);
    let (_, noisy, _) = run(&[
        "forward",
        "--M",
        "1",
        "--a",
        "0",
        "--Lambda",
        "0.04",
        "--ell",
        "100",
        "--eta-plus-re",
        "1e-3",
        "--eta-minus-re",
        "-1e-3",
    ]);
    let noisy = csv_row(&noisy);
    assert_eq!(clean["u"], noisy["u"]);
    let dv = get(&noisy, "v") - get(&clean, "v");
    assert!((dv - 1e-5).abs() < 1e-15, "dv = {dv:e}");
}
