//! End-to-end checks of the `qbsim` binary: CSV schemas, determinism,
//! config fail-fast behavior, and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn qbsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qbsim"))
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).expect("write config");
}

const SWEEP_CONFIG: &str = r#"
[scenario]
kind = "sweep-tau"
schedules = ["linear", "cube-root"]
drivers = ["adiabatic", "tqd"]
omega_tau_min = 1.0
omega_tau_max = 5.0
omega_tau_points = 3

[numerics]
steps_per_tau = 250
"#;

#[test]
fn sweep_schema_values_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    write(&config, SWEEP_CONFIG);

    let run = |out: &str| {
        let status = qbsim()
            .arg("sweep-tau")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .arg("--workers")
            .arg("2")
            .status()
            .expect("binary runs");
        assert!(status.success(), "sweep failed");
        fs::read_to_string(dir.path().join(out).join("sweep_tau.csv")).unwrap()
    };

    let first = run("a");
    let second = run("b");
    assert_eq!(first, second, "identical configs must give byte-identical CSV");

    let mut lines = first.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schedule,driver,omega_tau,ergotropy_over_Emax_qubit,status"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    // sorted by key, every row valid, every charge within the capacity
    let mut keys: Vec<(String, String, f64)> = Vec::new();
    for row in &rows {
        assert_eq!(row.len(), 5);
        assert_eq!(row[4], "ok");
        let omega_tau: f64 = row[2].parse().unwrap();
        let ergotropy: f64 = row[3].parse().unwrap();
        assert!((-1e-9..=1.0 + 1e-9).contains(&ergotropy), "ergotropy {ergotropy}");
        keys.push((row[0].to_string(), row[1].to_string(), omega_tau));
    }
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| {
        (a.0.as_str(), a.1.as_str())
            .cmp(&(b.0.as_str(), b.1.as_str()))
            .then(a.2.total_cmp(&b.2))
    });
    assert_eq!(keys, sorted, "rows must be key-sorted");

    // TQD rows saturate the charge at every duration
    for row in &rows {
        if row[1] == "tqd" {
            let e: f64 = row[3].parse().unwrap();
            assert!(e > 0.99, "TQD row below capacity: {e}");
        }
    }

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("a").join("sweep_tau.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["tool"]["name"], "qbsim");
    let runs = manifest["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 12);
    for entry in runs {
        assert_eq!(entry["status"], "ok");
        assert!(entry["step_halving_delta"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn trace_schema_eta_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("trace.toml");
    write(
        &config,
        r#"
[scenario]
kind = "trace"
schedules = ["cube-root"]
drivers = ["adiabatic", "tqd"]
omega_tau = 2.0
t_end_multiplier = 3.0

[numerics]
steps_per_tau = 200

[output]
dir = "traces"
"#,
    );
    let status = qbsim()
        .arg("trace")
        .arg("--config")
        .arg(&config)
        .current_dir(dir.path())
        .status()
        .expect("binary runs");
    assert!(status.success());

    let csv = fs::read_to_string(dir.path().join("traces").join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schedule,driver,omega_t,ergotropy_over_Emax_qubit,fidelity_to_target,eta_ls,at_tau,status"
    );
    let mut marker_count = 0;
    let mut saw_empty_eta = false;
    let mut saw_filled_eta = false;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8);
        assert_eq!(f[7], "ok");
        let omega_t: f64 = f[2].parse().unwrap();
        let charge: f64 = f[3].parse().unwrap();
        assert!((-1e-9..=1.0 + 1e-9).contains(&charge), "charge {charge}");
        if f[6] == "1" {
            marker_count += 1;
            assert!((omega_t - 2.0).abs() < 0.02, "marker off τ: {omega_t}");
        }
        if omega_t < 2.0 - 1e-9 {
            assert!(f[5].is_empty(), "eta_ls must be empty before τ");
            saw_empty_eta = true;
        } else {
            let eta: f64 = f[5].parse().expect("eta filled after τ");
            assert!((0.0..=1.0).contains(&eta));
            saw_filled_eta = true;
        }
        // starts uncharged
        if omega_t == 0.0 {
            let e: f64 = f[3].parse().unwrap();
            assert_eq!(e, 0.0);
        }
    }
    assert_eq!(marker_count, 2, "one τ marker per (schedule, driver)");
    assert!(saw_empty_eta && saw_filled_eta);
}

#[test]
fn cost_schema_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cost.toml");
    write(
        &config,
        r#"
[scenario]
kind = "cost"
schedules = ["linear"]
omega_tau_min = 1.0
omega_tau_max = 8.0
omega_tau_points = 4

[numerics]
steps_per_tau = 250
quad_points = 201
"#,
    );
    let status = qbsim()
        .arg("cost")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .expect("binary runs");
    assert!(status.success());

    let csv = fs::read_to_string(dir.path().join("out").join("cost.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "omega_tau,sigma_ad_over_hbar_omega,sigma_tqd_over_hbar_omega,sigma_rel,adiabatic_ergotropy_over_Emax_qubit,status"
    );
    let mut last_rel = f64::INFINITY;
    let mut count = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 6);
        assert_eq!(f[5], "ok");
        let ad: f64 = f[1].parse().unwrap();
        let tqd: f64 = f[2].parse().unwrap();
        let rel: f64 = f[3].parse().unwrap();
        assert!(tqd >= ad, "Σ_tqd {tqd} < Σ_ad {ad}");
        assert!(rel >= 1.0);
        assert!(rel <= last_rel + 1e-12, "Σ_rel must not increase");
        last_rel = rel;
        count += 1;
    }
    assert_eq!(count, 4);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("typo.toml");
    write(&config, &SWEEP_CONFIG.replace("omega_tau_points", "omega_tau_pts"));
    let output = qbsim()
        .arg("sweep-tau")
        .arg("--config")
        .arg(&config)
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("config error"), "stderr: {stderr}");
}

#[test]
fn kind_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    write(&config, SWEEP_CONFIG);
    let output = qbsim()
        .arg("trace")
        .arg("--config")
        .arg(&config)
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_config_exits_2() {
    let output = qbsim()
        .arg("cost")
        .arg("--config")
        .arg("/nonexistent/qbsim.toml")
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn selftest_passes_and_exits_0() {
    let output = qbsim().arg("selftest").output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "selftest failed:\n{stdout}");
    assert!(stdout.contains("0 failed"), "stdout: {stdout}");
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 15);
}

#[test]
fn space_override_changes_nothing_physical() {
    // the full-space and sector runs must agree on every reported charge
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    write(&config, SWEEP_CONFIG);
    let run = |space: &str, out: &str| {
        let status = qbsim()
            .arg("sweep-tau")
            .arg("--config")
            .arg(&config)
            .arg("--space")
            .arg(space)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .expect("binary runs");
        assert!(status.success());
        fs::read_to_string(dir.path().join(out).join("sweep_tau.csv")).unwrap()
    };
    let sector = run("sector", "s");
    let full = run("full", "f");
    for (a, b) in sector.lines().skip(1).zip(full.lines().skip(1)) {
        let ea: f64 = a.split(',').nth(3).unwrap().parse().unwrap();
        let eb: f64 = b.split(',').nth(3).unwrap().parse().unwrap();
        assert!((ea - eb).abs() < 1e-8, "space mismatch: {ea} vs {eb}");
    }
}
