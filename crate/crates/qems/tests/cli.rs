use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use qems_core::moments::{exchange_time, nbar_a_analytic};
use qems_core::params::SystemParams;

fn qems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qems")).args(args).env_remove("QEMS_OUTPUT_DIR").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qems(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Header and numeric rows of a CSV with `#` comments.
fn table(csv_text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv_text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn preamble_value(text: &str, name: &str) -> f64 {
    let prefix = format!("# param {name} = ");
    let line = text.lines().find(|l| l.starts_with(&prefix)).unwrap();
    num(line[prefix.len()..].split_whitespace().next().unwrap())
}

fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn exchange_defaults() {
    let (header, rows) = table(&ok(&["exchange", "--no-timestamp"]));
    assert_eq!(header, ["t_s", "nbar_a", "nbar_b", "re_c", "im_c"]);
    assert_eq!(rows.len(), 5001);
    assert_eq!(num(&rows[5000][0]), 50e-6);
    let (i_max, _) = rows.iter().enumerate().take(1000).max_by(|a, b| num(&a.1[2]).total_cmp(&num(&b.1[2]))).unwrap();
    assert!((num(&rows[i_max][0]) - 4.76e-6).abs() < 0.02e-6);
    for row in &rows {
        assert!(row.iter().all(|c| num(c).is_finite()));
    }
}

#[test]
fn preamble_records_parameters_and_seed() {
    let text = ok(&["exchange", "--points", "3", "--seed", "9", "--kappa", "52.5kHz"]);
    assert!(text.starts_with("# qems "));
    assert!(text.contains("# seed: 9"));
    assert!(text.contains("# generated: unix "));
    assert!((preamble_value(&text, "kappa") / (2.0 * PI * 52.5e3) - 1.0).abs() < 1e-12);
    assert!(!ok(&["exchange", "--points", "3", "--no-timestamp"]).contains("generated"));
}

#[test]
fn conflicting_q_and_gamma_is_a_config_error() {
    let out = qems(&["params", "--q", "30000", "--gamma-a", "5000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    assert_eq!(qems(&["params", "--kappa", "5 parsecs"]).status.code(), Some(2));
    assert_eq!(qems(&["params", "--unknown-flag", "1"]).status.code(), Some(2));
    assert_eq!(qems(&["exchange", "--points", "1"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_three() {
    // κ below γ_a/4 has no exchange time
    let out = qems(&["cool", "--scheme", "single", "--kappa", "100"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain error"));
}

#[test]
fn io_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out.csv");
    let out = qems(&["params", "-o", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(qems(&["params", "--config", "/nonexistent/qems.json"]).status.code(), Some(4));
}

#[test]
fn readout_ratio_at_unit_occupation() {
    let (header, rows) = table(&ok(&["readout", "--nbar", "1"]));
    let col = header.iter().position(|h| h == "ratio_re").unwrap();
    assert!((num(&rows[0][col]) - 0.5).abs() < 1e-9);
}

#[test]
fn readout_protocol_at_design_point() {
    let (header, rows) = table(&ok(&["readout", "--seed", "3", "--no-timestamp"]));
    let get = |name: &str| num(&rows[0][header.iter().position(|h| h == name).unwrap()]);
    // a single seed may legitimately miss the 95% interval; require it to be
    // within three half-widths
    let half_width = 0.5 * (get("nbar_a0_upper") - get("nbar_a0_lower"));
    assert!(half_width > 0.0 && half_width < 200.0);
    assert!((get("nbar_a0_est") - 4000.0).abs() < 3.0 * half_width);
    assert_eq!(get("shots"), 1e5);
    assert_eq!(get("reliable"), 1.0);
}

#[test]
fn sweep_matches_moment_evaluation() {
    let (header, rows) = table(&ok(&["sweep", "--vary", "kappa", "--from", "10kHz", "--to", "100kHz", "--points", "10"]));
    assert_eq!(header, ["point", "kappa_rad_s", "tau_star_s", "nbar_a_at_tau_star", "nbar_b_at_tau_star"]);
    assert_eq!(rows.len(), 10);
    let gamma = SystemParams::cantilever_reference().gamma_a;
    for (i, row) in rows.iter().enumerate() {
        let kappa = num(&row[1]);
        let expected_kappa = 2.0 * PI * (10e3 + 10e3 * i as f64);
        assert!((kappa - expected_kappa).abs() < 1e-9 * expected_kappa);
        let tau = exchange_time(kappa, gamma).unwrap();
        assert!((num(&row[2]) - tau).abs() < 1e-12 * tau);
        let n_a = nbar_a_analytic(tau, 4000.0, 0.0, kappa, gamma).unwrap();
        assert!((num(&row[3]) - n_a).abs() < 1e-6 * n_a, "{} vs {n_a}", row[3]);
    }
}

#[test]
fn sweep_is_deterministic_across_job_counts() {
    let args = ["sweep", "--vary", "q", "--from", "1e4", "--to", "1e6", "--points", "16", "--log", "--no-timestamp"];
    let one = ok(&[&args[..], &["--jobs", "1"]].concat());
    let four = ok(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(body(&one), body(&four));
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["readout", "--shots", "5000", "--seed", "17", "--no-timestamp"];
    assert_eq!(ok(&args), ok(&args));
    let other = ok(&["readout", "--shots", "5000", "--seed", "18", "--no-timestamp"]);
    assert_ne!(body(&ok(&args)), body(&other));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"params": {"nbar_a0": 2, "kappa": "10kHz"}, "seed": 4, "points": 3}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let text = ok(&["exchange", "--config", c, "--kappa", "20kHz", "--no-timestamp"]);
    assert!(text.contains("# param nbar_a0 = 2e0"));
    assert!((preamble_value(&text, "kappa") / (2.0 * PI * 20e3) - 1.0).abs() < 1e-12);
    assert!(text.contains("# seed: 4"));
    assert_eq!(table(&text).1.len(), 3);

    std::fs::write(&cfg, r#"{"params": {"kapa": 1}}"#).unwrap();
    assert_eq!(qems(&["params", "--config", c]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qems"))
        .args(["force", "--force", "1e-18,2e-18"])
        .env("QEMS_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("force.csv")).unwrap();
    let (_, rows) = table(&text);
    assert!((num(&rows[1][1]) / num(&rows[0][1]) - 4.0).abs() < 1e-12);
    assert!(Path::new(&dir.path().join("force.csv")).exists());
}

#[test]
fn evolve_guardrail_and_cost_estimate() {
    let out = qems(&["evolve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-large"));

    let out = qems(&["evolve", "--allow-large", "--nbar-a0", "12", "--levels-a", "4", "--levels-b", "4", "--t-max", "1us", "--points", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("estimated cost"));
}

#[test]
fn evolve_small_instance_tracks_moments() {
    let full = ok(&["evolve", "--nbar-a0", "0.5", "--t-max", "2us", "--points", "5", "--no-timestamp"]);
    let moments = ok(&["exchange", "--nbar-a0", "0.5", "--t-max", "2us", "--points", "5", "--no-timestamp"]);
    let (header, f_rows) = table(&full);
    assert_eq!(header.last().unwrap(), "trace_error");
    let (_, m_rows) = table(&moments);
    for (f, m) in f_rows.iter().zip(&m_rows) {
        for c in 1..3 {
            assert!((num(&f[c]) - num(&m[c])).abs() < 1e-3, "{f:?} vs {m:?}");
        }
    }
}

#[test]
fn cool_lists_every_scheme() {
    let (_, rows) = table(&ok(&["cool", "--cycles", "3"]));
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["single", "dump", "two-traps", "iterative", "iterative", "iterative", "continuous"]);
    assert!((num(&rows[0][2]) - 39.06392144).abs() < 1e-6);
}

#[test]
fn params_reports_derived_quantities() {
    let (_, rows) = table(&ok(&["params"]));
    let get = |name: &str| num(&rows.iter().find(|r| r[0] == name).unwrap()[1]);
    assert!((get("tau_star") - 4.761928043e-6).abs() < 1e-14);
    assert!((get("gamma_a") - 4125.958351714595).abs() < 1e-9);
    assert!((get("eta") - 0.04433).abs() < 1e-4);
}
