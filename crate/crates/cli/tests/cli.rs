use std::fs;
use std::path::Path;
use std::process::{Command, Output as ProcessOutput};

use optomech_cli::recipes::recipe;
use optomech_cli::sweep::{evaluate_point, run_sweep, Output};

fn optomech(args: &[&str]) -> ProcessOutput {
    Command::new(env!("CARGO_BIN_EXE_optomech")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &ProcessOutput) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_SWEEP: &str = r#"{
  "id": "small",
  "system": { "kappa_over_omega_m": 0.5 },
  "x": { "name": "power_mw", "min": 10, "max": 150, "count": 2 },
  "y": { "name": "delta_over_omega_m", "min": 0.8, "max": 1.0, "count": 2 },
  "outputs": ["e_n", "n_eff"]
}"#;

/// Data lines of a CSV file, without the metadata prelude.
fn csv_lines(text: &str) -> Vec<&str> {
    text.split("\r\n").filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

#[test]
fn two_by_two_sweep_writes_four_rows_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SMALL_SWEEP);
    let out = dir.path().join("out");
    let res = optomech(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));

    let csv = fs::read_to_string(out.join("small.csv")).unwrap();
    let lines = csv_lines(&csv);
    assert_eq!(lines[0], "power_mw,delta_over_omega_m,e_n,n_eff,stable");
    assert_eq!(lines.len(), 5);
    assert!(csv.contains("\"kappa_over_omega_m\":0.5"));
    assert!(csv.contains("# constants: CODATA-2018"));

    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("small.json")).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    assert_eq!(doc["metadata"]["config"]["x"]["max"], 150.0);
    assert_eq!(doc["metadata"]["config"]["system"]["wavelength_nm"], 810.0);
    assert!(doc["metadata"]["tool_version"].is_string());
}

#[test]
fn unstable_points_carry_no_measures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SMALL_SWEEP);
    let out = dir.path().join("out");
    assert!(optomech(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());

    let csv = fs::read_to_string(out.join("small.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv_lines(&csv)[1..].iter().map(|l| l.split(',').collect()).collect();
    let unstable: Vec<_> = rows.iter().filter(|r| r[4] == "false").collect();
    let stable: Vec<_> = rows.iter().filter(|r| r[4] == "true").collect();
    assert!(!unstable.is_empty() && !stable.is_empty());
    for r in unstable {
        assert_eq!((r[2], r[3]), ("", ""));
    }
    for r in stable {
        assert!(r[2].parse::<f64>().is_ok() && r[3].parse::<f64>().is_ok());
    }

    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("small.json")).unwrap()).unwrap();
    for row in doc["rows"].as_array().unwrap() {
        if row["stable"] == false {
            assert!(row["e_n"].is_null() && row["n_eff"].is_null() && row["eta_minus"].is_null());
        }
    }
    let dat = fs::read_to_string(out.join("small.dat")).unwrap();
    let data: Vec<&str> = dat.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 5, "two blocks of two separated by a blank line");
    assert_eq!(data[2], "");
    assert!(data.iter().filter(|l| l.ends_with(" 0")).all(|l| l.contains(" ? ? ")));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SMALL_SWEEP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(optomech(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    }
    for name in ["small.csv", "small.json", "small.dat"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn fig2a_recipe_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = optomech(&["sweep", "--recipe", "fig2a", "--grid", "3", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let csv = fs::read_to_string(out.join("fig2a.csv")).unwrap();
    let lines = csv_lines(&csv);
    assert_eq!(lines[0], "power_mw,delta_over_omega_m,e_n,stable");
    assert_eq!(lines.len(), 10);
}

#[test]
fn emitted_config_reproduces_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(optomech(&["sweep", "--recipe", "fig4b", "--grid", "3", "--out", out.to_str().unwrap()])
        .status
        .success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fig4b.json")).unwrap()).unwrap();
    let cfg = write(dir.path(), "again.json", &doc["metadata"]["config"].to_string());
    let again = dir.path().join("again");
    assert!(optomech(&["sweep", "--config", &cfg, "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(out.join("fig4b.csv")).unwrap(), fs::read(again.join("fig4b.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_code_one_and_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let typo = SMALL_SWEEP.replace("\"kappa_over_omega_m\"", "\"kappa_over_omega\"");
    let cfg = write(dir.path(), "typo.json", &typo);
    let res = optomech(&["sweep", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("line 3"), "{}", stderr(&res));

    let empty = SMALL_SWEEP.replace("[\"e_n\", \"n_eff\"]", "[]");
    let cfg = write(dir.path(), "empty.json", &empty);
    let res = optomech(&["sweep", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(1));
    let msg = stderr(&res);
    assert!(msg.contains("line 6"), "{msg}");
    for o in Output::ALL {
        assert!(msg.contains(o.as_str()), "{msg}");
    }

    let negative = r#"{
  "quality_factor": 1e6,
  "temperature_k": -0.4
}"#;
    let cfg = write(dir.path(), "neg.json", negative);
    let res = optomech(&["point", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("line 3"), "{}", stderr(&res));

    let res = optomech(&["sweep", "--recipe", "fig10a"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("fig9c"));
}

#[test]
fn point_reports_thermal_state_without_drive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", r#"{ "laser_power_mw": 0 }"#);
    let res = optomech(&["point", "--config", &cfg]);
    assert!(res.status.success(), "{}", stderr(&res));
    let doc: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let rec = &doc["result"]["record"];
    assert_eq!(rec["e_n"], 0.0);
    let params = optomech_cli::config::SystemConfig::default().to_params().unwrap();
    let n = params.mechanical_occupancy();
    assert!((rec["n_eff"].as_f64().unwrap() - n).abs() < 1e-9 * n);
}

#[test]
fn spectrum_command_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{ "system": { "phase_noise": { "model": "white", "linewidth_over_2pi_hz": 1000 } },
             "frequency_points": 11, "tau_points": 6 }"#,
    );
    let out = dir.path().join("out");
    let res = optomech(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let spec = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let lines = csv_lines(&spec);
    assert_eq!(lines[0], "frequency_hz,s_phidot,chi_eff_abs_sq");
    assert_eq!(lines.len(), 12);
    let gamma_l = 2.0 * std::f64::consts::PI * 1000.0;
    for l in &lines[1..] {
        let s: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((s - 2.0 * gamma_l).abs() < 1e-9 * s);
    }
    let corr = fs::read_to_string(out.join("correlation.csv")).unwrap();
    for l in &csv_lines(&corr)[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - (-gamma_l * v[0]).exp()).abs() < 1e-8);
    }
}

#[test]
fn validate_command_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{ "system": { "phase_noise": { "model": "bandpass", "linewidth_over_2pi_hz": 100,
                                          "band_center_over_2pi_hz": 50000 } },
             "seed": 3, "n_ensemble": 16, "n_steps": 200000, "segment_len": 8192 }"#,
    );
    let out = dir.path().join("v.csv");
    let res = optomech(&["validate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(&out).unwrap();
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "check,estimate,standard_error,reference,pass");
    assert_eq!(lines.len(), 6);
    let failed = lines[1..].iter().filter(|l| l.ends_with(",false")).count();
    assert_eq!(res.status.code(), Some(if failed == 0 { 0 } else { 2 }), "{}", stderr(&res));

    let white = write(dir.path(), "w.json", r#"{ "system": { "phase_noise": { "model": "white", "linewidth_over_2pi_hz": 100 } } }"#);
    assert_eq!(optomech(&["validate", "--config", &white]).status.code(), Some(1));
}

#[test]
fn sweep_rows_match_pointwise_evaluation() {
    let cfg = recipe("fig6b", 4).unwrap();
    let result = run_sweep(&cfg).unwrap();
    let xs = cfg.x.values();
    let ys = cfg.y.values();
    assert_eq!(result.rows.len(), 16);
    for (k, row) in result.rows.iter().enumerate() {
        let (x, y) = (xs[k / 4], ys[k % 4]);
        assert_eq!((row.x, row.y), (x, y));
        let p = cfg.system_at(x, y).to_params().unwrap();
        assert_eq!(row.record, evaluate_point(&p));
    }
}

#[test]
fn fig2_linewidths_shrink_peak_and_area() {
    let runs: Vec<_> = ["fig2a", "fig2b", "fig2c"].iter().map(|id| run_sweep(&recipe(id, 40).unwrap()).unwrap()).collect();
    let maxes: Vec<f64> = runs.iter().map(|r| r.max_of(Output::EN).unwrap()).collect();
    let areas: Vec<f64> = runs.iter().map(|r| r.area_fraction(Output::EN, |e| e > 0.0)).collect();
    assert!(maxes[0] > maxes[1] && maxes[1] > maxes[2], "{maxes:?}");
    assert!(areas[0] > areas[1] && areas[1] > areas[2], "{areas:?}");
}

#[test]
fn fig3c_entanglement_only_in_resolved_sideband() {
    let result = run_sweep(&recipe("fig3c", 80).unwrap()).unwrap();
    let entangled: Vec<f64> = result
        .rows
        .iter()
        .filter(|r| r.record.e_n.is_some_and(|e| e > 0.0))
        .map(|r| r.y)
        .collect();
    assert!(!entangled.is_empty());
    assert!(entangled.iter().all(|&k| k < 1.0), "largest κ/ω_m {}", entangled.iter().cloned().fold(0.0, f64::max));
}
