//! End-to-end checks of the command-line surface: exit codes, CSV layout,
//! report contents, and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eitsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Parses a spectrum CSV into (omega, t2) pairs.
fn parse_omega_t2(csv: &str) -> Vec<(f64, f64)> {
    let mut rows = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            assert_eq!(line, "omega,t_re,t_im,d_re,d_im,t2,d2");
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        rows.push((fields[0].parse().unwrap(), fields[5].parse().unwrap()));
    }
    rows
}

const PAIR_CONFIG: &str = r#"{
  "uniform": { "n": 2, "kappa0": 0.002, "kappa1": 2.0, "kappa2": 2.0, "delta": 1.0 }
}"#;

#[test]
fn spectrum_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "single.json",
        r#"{
          "uniform": { "n": 1, "kappa0": 0.0, "kappa1": 1.0, "kappa2": 1.0, "delta": 1.0 },
          "grid": { "start": -3.0, "stop": 3.0, "points": 7 }
        }"#,
    );
    let output = run(&["spectrum", "--config", &config], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 8);
    assert!(stdout.ends_with('\n'));
    assert!(stdout.starts_with("omega,t_re,t_im,d_re,d_im,t2,d2\n"));
}

#[test]
fn closed_form_method_on_an_asymmetric_chain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "asym.json",
        r#"{
          "uniform": { "n": 2, "kappa0": 0.0, "kappa1": 2.0, "kappa2": 1.0, "delta": 1.0 },
          "grid": { "start": -1.0, "stop": 2.0, "points": 5 }
        }"#,
    );
    let output = run(&["spectrum", "--config", &config, "--method", "closed"], dir.path());
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("kappa1"), "{}", stderr_of(&output));
}

#[test]
fn two_cavity_spectrum_shows_two_dips_and_one_window() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.json", PAIR_CONFIG);
    let out = dir.path().join("pair.csv");
    let output =
        run(&["spectrum", "--config", &config, "--out", out.to_str().unwrap()], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let rows = parse_omega_t2(&fs::read_to_string(&out).unwrap());
    let near = |target: f64| {
        rows.iter()
            .filter(|(w, _)| (w - target).abs() < 2e-3)
            .map(|&(_, p)| p)
            .fold(f64::INFINITY, f64::min)
    };
    assert!(near(0.0) < 1e-3);
    assert!(near(1.0) < 1e-3);
    let window_peak =
        rows.iter().filter(|(w, _)| *w > 0.0 && *w < 1.0).map(|&(_, p)| p).fold(0.0, f64::max);
    assert!(window_peak > 0.9, "window peak {window_peak}");
}

#[test]
fn unknown_config_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "typo.json",
        r#"{ "uniforms": { "n": 1, "kappa0": 0.0, "kappa1": 1.0, "kappa2": 1.0, "delta": 1.0 } }"#,
    );
    let output = run(&["spectrum", "--config", &config], dir.path());
    assert_eq!(output.status.code(), Some(2));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("unknown field"), "{stderr}");
    assert!(stderr.contains("line"), "{stderr}");
}

#[test]
fn ambiguous_chain_source_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "empty.json", r#"{}"#);
    let output = run(&["spectrum", "--config", &config], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("exactly one"));
}

#[test]
fn negative_rate_in_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{ "chain": { "cavities": [
              { "omega": 0.0, "kappa0": 0.0, "kappa1": -1.0, "kappa2": 1.0 }
           ] } }"#,
    );
    let output = run(&["spectrum", "--config", &config], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("negative rate"));
}

#[test]
fn unwritable_output_path_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.json", PAIR_CONFIG);
    let output = run(
        &["spectrum", "--config", &config, "--points", "5", "--out", "missing-dir/out.csv"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn serialized_chain_round_trips_to_identical_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = write_config(
        dir.path(),
        "uniform.json",
        r#"{
          "uniform": { "n": 2, "kappa0": 0.002, "kappa1": 2.0, "kappa2": 2.0, "delta": 1.0 },
          "grid": { "start": -3.0, "stop": 4.0, "points": 501 }
        }"#,
    );
    // serialize the same chain explicitly and feed it back in
    let chain = eitsim::uniform_chain(2, 0.002, 2.0, 2.0, 1.0).unwrap();
    let explicit = write_config(
        dir.path(),
        "explicit.json",
        &format!(
            r#"{{ "chain": {}, "grid": {{ "start": -3.0, "stop": 4.0, "points": 501 }} }}"#,
            serde_json::to_string(&chain).unwrap()
        ),
    );
    let a = run(&["spectrum", "--config", &uniform], dir.path());
    let b = run(&["spectrum", "--config", &explicit], dir.path());
    assert!(a.status.success(), "{}", stderr_of(&a));
    assert!(b.status.success(), "{}", stderr_of(&b));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn figure2_single_cavity_curves_are_numerically_identical() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["figure2", "--n", "1", "--out", "n1"], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let coupled = fs::read_to_string(dir.path().join("n1_coupled.csv")).unwrap();
    let decoupled = fs::read_to_string(dir.path().join("n1_decoupled.csv")).unwrap();
    for (a, b) in coupled.lines().skip(1).zip(decoupled.lines().skip(1)) {
        let av: Vec<f64> = a.split(',').map(|f| f.parse().unwrap()).collect();
        let bv: Vec<f64> = b.split(',').map(|f| f.parse().unwrap()).collect();
        for (x, y) in av.iter().zip(&bv) {
            assert!((x - y).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn figure2_n4_structure_and_decoupled_background() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["figure2", "--n", "4", "--out", "n4"], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let coupled = parse_omega_t2(&fs::read_to_string(dir.path().join("n4_coupled.csv")).unwrap());

    let mut dips = 0;
    let mut windows = 0;
    for w in coupled.windows(3) {
        let (_, p0) = w[0];
        let (omega, p1) = w[1];
        let (_, p2) = w[2];
        if p1 < p0 && p1 < p2 && p1 < 1e-3 {
            dips += 1;
        }
        if p1 > p0 && p1 > p2 && p1 > 0.9 {
            assert!(omega > 0.0 && omega < 3.0, "window at {omega}");
            windows += 1;
        }
    }
    assert_eq!(dips, 4);
    assert_eq!(windows, 3);

    let decoupled =
        parse_omega_t2(&fs::read_to_string(dir.path().join("n4_decoupled.csv")).unwrap());
    let interior_max = decoupled
        .iter()
        .filter(|(w, _)| *w >= 0.0 && *w <= 3.0)
        .map(|&(_, p)| p)
        .fold(0.0, f64::max);
    assert!(interior_max < 0.5, "decoupled interior max {interior_max}");
}

#[test]
fn figure2_n6_has_five_transparent_windows() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["figure2", "--n", "6", "--out", "n6"], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let coupled = parse_omega_t2(&fs::read_to_string(dir.path().join("n6_coupled.csv")).unwrap());
    let windows: Vec<(f64, f64)> = coupled
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1 && w[1].0 > 0.0 && w[1].0 < 5.0)
        .map(|w| w[1])
        .collect();
    assert_eq!(windows.len(), 5, "{windows:?}");
    assert!(windows.iter().all(|&(_, p)| p > 0.9), "{windows:?}");
}

#[test]
fn figure2_rejects_out_of_range_n() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["figure2", "--n", "7"], dir.path());
    assert_eq!(output.status.code(), Some(2));
}

fn parse_trend(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let (param, value) = line.split_once(',').unwrap();
            (param.parse().unwrap(), value.parse().expect("no no-window markers expected"))
        })
        .collect()
}

#[test]
fn figure3_panel_a_is_strictly_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["figure3", "--panel", "a"], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let rows = parse_trend(&String::from_utf8(output.stdout).unwrap());
    assert!(rows.len() >= 4);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1), "{rows:?}");
}

#[test]
fn figure3_panel_b_starts_near_unity_and_ends_at_0_04() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["figure3", "--panel", "b"], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let rows = parse_trend(&String::from_utf8(output.stdout).unwrap());
    assert!(rows[0].1 > 0.999, "first value {}", rows[0].1);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1), "{rows:?}");
    let last = rows.last().unwrap();
    assert_eq!(last.0, 1.0);
    assert!((last.1 - 0.04).abs() < 1e-6, "kappa0=delta value {}", last.1);
}

#[test]
fn windows_reports_extrema_and_width_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "narrow.json",
        r#"{ "uniform": { "n": 2, "kappa0": 1e-4, "kappa1": 2.0, "kappa2": 2.0, "delta": 1.0 } }"#,
    );
    let output = run(&["windows", "--config", &config], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let minima = report["minima"].as_array().unwrap();
    let maxima = report["maxima"].as_array().unwrap();
    assert_eq!(minima.len(), 2);
    assert_eq!(maxima.len(), 1);
    let fwhm = maxima[0]["fwhm"].as_f64().unwrap();
    assert!((fwhm - 0.125).abs() < 0.0125, "fwhm {fwhm}");
    assert!((maxima[0]["omega"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn oracle_check_accepts_the_reference_pair() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.json", PAIR_CONFIG);
    let output = run(&["oracle-check", "--config", &config], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let report = String::from_utf8(output.stdout).unwrap();
    assert!(report.contains("probes: 16"));
    assert!(report.contains("status: ok"));
}

#[test]
fn oracle_check_is_exact_for_an_uncoupled_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "dark.json",
        r#"{ "uniform": { "n": 2, "kappa0": 1.0, "kappa1": 0.0, "kappa2": 0.0, "delta": 1.0 } }"#,
    );
    let output = run(&["oracle-check", "--config", &config], dir.path());
    assert!(output.status.success(), "{}", stderr_of(&output));
    let report = String::from_utf8(output.stdout).unwrap();
    assert!(report.contains("max |T_td - T_solver|: 0.000e0"), "{report}");
    assert!(report.contains("max balance residual: 0.000e0"), "{report}");
}

#[test]
fn oracle_check_with_loose_tolerance_exits_4_but_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.json", PAIR_CONFIG);
    let report_path = dir.path().join("report.txt");
    let output = run(
        &[
            "oracle-check",
            "--config",
            &config,
            "--rel-tol",
            "1e-2",
            "--out",
            report_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(4));
    let report = fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("status: MISMATCH"), "{report}");
}

#[test]
fn svg_outputs_are_wellformed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.json", PAIR_CONFIG);
    let svg_path = dir.path().join("pair.svg");
    let output = run(
        &[
            "spectrum",
            "--config",
            &config,
            "--points",
            "801",
            "--out",
            "pair.csv",
            "--svg",
            svg_path.to_str().unwrap(),
            "--log-y",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(!svg.contains("NaN"));

    let overlay = dir.path().join("overlay.svg");
    let output = run(
        &["figure2", "--n", "2", "--out", "f2", "--svg", overlay.to_str().unwrap()],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let svg = fs::read_to_string(&overlay).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn spectrum_bytes_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.json", PAIR_CONFIG);
    let single =
        run(&["spectrum", "--config", &config, "--points", "2001", "--threads", "1"], dir.path());
    let many =
        run(&["spectrum", "--config", &config, "--points", "2001", "--threads", "5"], dir.path());
    assert!(single.status.success() && many.status.success());
    assert_eq!(single.stdout, many.stdout);
}
