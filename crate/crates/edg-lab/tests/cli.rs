use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edg-lab"))
        .args(args)
        .env_remove("EDG_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn file_bytes(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn lambda_out_of_range_exits_two_and_names_lambda() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&["edg", "--lambda", "2.5", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lambda"), "{err}");
    assert!(!d.path().join("summary.json").exists());
}

#[test]
fn unknown_config_field_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"schema_version": 1, "kind": "edg", "rhoo": 0.5}"#).unwrap();
    let o = lab(&["edg", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rhoo"));
}

#[test]
fn config_kind_must_match_subcommand() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"schema_version": 1, "kind": "heat"}"#).unwrap();
    let o = lab(&["edg", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind"));
}

#[test]
fn coarsening_example_fits_one_third() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&[
        "edg", "--lambda", "0", "--rho", "0.5", "--n", "4096", "--t-end", "1e3", "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&d.path().join("summary.json"));
    let beta = s["fit"]["exponent"].as_f64().unwrap();
    assert!((0.28..=0.38).contains(&beta), "beta = {beta}");
    let manifest = read_json(&d.path().join("manifest.json"));
    assert_eq!(manifest["config_hash"], s["config_hash"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = lab(&[
            "edg", "--lambda", "1", "--n", "4096", "--t-end", "200", "--snapshots", "--outputs", "7",
            "--out", d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["observables.csv", "snapshots.csv", "summary.json"] {
        assert_eq!(file_bytes(a.path(), f), file_bytes(b.path(), f), "{f} differs");
    }
    let (ma, mb) = (read_json(&a.path().join("manifest.json")), read_json(&b.path().join("manifest.json")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["files"], mb["files"]);
}

#[test]
fn lattice_too_small_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&["edg", "--lambda", "1", "--n", "2048", "--t-end", "200", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation limit"));
}

#[test]
fn out_directory_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_edg-lab"))
        .args(["heat", "--n", "512", "--t-end", "10", "--outputs", "3"])
        .env("EDG_LAB_OUT", d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("summary.json").exists());
}

fn sweep_template(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("template.json");
    fs::write(
        &p,
        r#"{"schema_version": 1, "kind": "edg", "n": 4096, "t_end": 100, "outputs": 5}"#,
    )
    .unwrap();
    p
}

#[test]
fn sweep_order_does_not_change_the_merge() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let tpl = sweep_template(cfg_dir.path());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let tpl = tpl.to_str().unwrap();
    let oa = lab(&["sweep", "--config", tpl, "--lambdas", "0,0.5,1", "--seeds", "1,2", "--out", a.path().to_str().unwrap()]);
    let ob = lab(&["sweep", "--config", tpl, "--lambdas", "1,0,0.5", "--seeds", "2,1", "--out", b.path().to_str().unwrap()]);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(file_bytes(a.path(), "sweep.json"), file_bytes(b.path(), "sweep.json"));
    let r = read_json(&a.path().join("sweep.json"));
    assert_eq!(r["runs"].as_object().unwrap().len(), 6);
}

#[test]
fn single_entry_sweep_matches_a_single_run() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let tpl = sweep_template(cfg_dir.path());
    let s = tempfile::tempdir().unwrap();
    let o = lab(&[
        "sweep", "--config", tpl.to_str().unwrap(), "--lambdas", "0.5", "--seeds", "3", "--out",
        s.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&s.path().join("sweep.json"));
    let (hash, entry) = r["runs"].as_object().unwrap().iter().next().unwrap();

    let single = tempfile::tempdir().unwrap();
    let o = lab(&[
        "edg", "--config", tpl.to_str().unwrap(), "--lambda", "0.5", "--seed", "3", "--out",
        single.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary = read_json(&single.path().join("summary.json"));
    assert_eq!(&summary["config_hash"], hash);
    assert_eq!(entry["summary"], summary);
    let child = s.path().join("runs").join(hash);
    assert_eq!(file_bytes(&child, "observables.csv"), file_bytes(single.path(), "observables.csv"));
}

#[test]
fn sweep_reports_the_worst_exit_code() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let tpl = sweep_template(cfg_dir.path());
    let s = tempfile::tempdir().unwrap();
    let o = lab(&[
        "sweep", "--config", tpl.to_str().unwrap(), "--lambdas", "0,2.5", "--out",
        s.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let r = read_json(&s.path().join("sweep.json"));
    assert_eq!(r["exit_code"], 2);
}

#[test]
fn verify_subset_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&["verify", "--criteria", "5,13,16", "--out", d.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.contains(": PASS ")).count(), 3, "{stdout}");
    let v = read_json(&d.path().join("verify.json"));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn kernel_table_rejects_oversized_grids() {
    let d = tempfile::tempdir().unwrap();
    let o = lab(&["kernel", "--n", "5000", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n"));
}
