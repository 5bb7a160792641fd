//! End-to-end checks of the command-line interface: output artifacts, exit
//! codes, and manifest-driven reruns.

use std::path::Path;
use std::process::Command;

fn qball() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qball"))
}

fn stdout_of(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn observables_prints_reference_mass() {
    let text = stdout_of(qball().args(["observables", "--omega", "1.9"]));
    assert!(text.contains("M         = 1.2528"), "{text}");
}

#[test]
fn profile_at_zero_prints_center_value() {
    let text = stdout_of(qball().args(["profile", "-d", "1", "--omega", "1.9", "--at", "0"]));
    assert_eq!(text.trim(), "0.320596");
}

#[test]
fn profile_file_export_is_two_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prof.dat");
    stdout_of(qball().args([
        "profile",
        "-d",
        "1",
        "--omega",
        "1.8",
        "--r-max",
        "5",
        "--dr",
        "0.5",
        "--file",
        path.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    for line in lines {
        assert_eq!(line.split_whitespace().count(), 2, "line: {line}");
    }
}

#[test]
fn reproduce_table1_u_cr_column_is_point_one() {
    let dir = tempfile::tempdir().unwrap();
    stdout_of(qball().args(["reproduce", "table1", "--out", dir.path().to_str().unwrap()]));
    let csv = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let u_cr: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((u_cr - 0.1).abs() < 0.01, "u_cr = {u_cr} in {line}");
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    // Unknown subcommand: usage text, exit 1.
    let out = qball().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Config errors: exit 1.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"scenario": "barrier_scatter"}"#).unwrap();
    let out = qball()
        .args(["run", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    // Numerical failures: exit 2 (inconsistent search bracket).
    let search = dir.path().join("search.json");
    std::fs::write(
        &search,
        r#"{
            "scenario": "critical_velocity_search",
            "qball": {"omega": 1.9, "x0": -15.0},
            "obstruction": {"lambda0": 0.01, "region": {"type": "interval", "lo": -10.0, "hi": 10.0}},
            "bracket": [0.01, 0.05],
            "grid": {"dimension": 1, "half_extent": 60.0, "dx": 0.2, "dt": 0.05},
            "t_end": 400.0
        }"#,
    )
    .unwrap();
    let out = qball()
        .args([
            "run",
            "--config",
            search.to_str().unwrap(),
            "--out",
            dir.path().join("search_out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_manifest_before_outputs_and_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("rest.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "scenario": "rest_release",
            "qball": {"omega": 1.9, "x0": -15.0},
            "obstruction": {"lambda0": 0.5, "region": {"type": "interval", "lo": -10.0, "hi": 10.0}},
            "grid": {"dimension": 1, "half_extent": 60.0, "dx": 0.1, "dt": 0.025},
            "t_end": 30.0
        }"#,
    )
    .unwrap();
    let out_a = dir.path().join("a");
    stdout_of(qball().args([
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]));
    assert!(out_a.join("manifest.json").exists());
    assert!(out_a.join("summary.json").exists());
    let csv_name = "rest_release_1.9_0_0.5.csv";
    assert!(out_a.join(csv_name).exists());

    // Re-run from the manifest into a fresh directory: identical CSV bytes.
    let out_b = dir.path().join("b");
    stdout_of(qball().args([
        "run",
        "--config",
        out_a.join("manifest.json").to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]));
    let a = std::fs::read(out_a.join(csv_name)).unwrap();
    let b = std::fs::read(out_b.join(csv_name)).unwrap();
    assert_eq!(a, b, "rerun from manifest is not bit-identical");
}

#[test]
fn out_root_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = qball()
        .env("QBALL_OUT_ROOT", dir.path())
        .args(["reproduce", "table1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("table1").join("table1.csv").exists());
}

fn repo_config(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn sweep_accepts_sweep_configs_and_rejects_single_runs() {
    // Checked-in sweep config parses and is accepted by `sweep` (validated,
    // not run: missing obstruction lists etc. would error before any run).
    let out = qball()
        .args([
            "sweep",
            "--config",
            repo_config("fig3.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    // fig3 is a single run: sweep must refuse with a config error.
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sweep"), "{err}");
}

#[test]
fn checked_in_configs_all_validate() {
    for entry in std::fs::read_dir(repo_config(".")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = qball::experiments::ScenarioConfig::from_json_str(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
