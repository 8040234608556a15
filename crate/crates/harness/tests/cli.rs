use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cckm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cckm")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("cfg.json");
    fs::write(
        &p,
        r#"{"nx": 7, "train_steps": 12, "shutin_steps": 4, "highrate_steps": 6, "test_steps": 10}"#,
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn version_and_help() {
    let out = cckm(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
    let out = cckm(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["run-case", "simulate", "fit", "evaluate"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();
    assert_eq!(cckm(&["run-case", "--case", "a", "--nx", "4", "--out", o]).status.code(), Some(2));
    assert_eq!(cckm(&["run-case", "--case", "z", "--out", o]).status.code(), Some(2));
    assert_eq!(cckm(&["run-case", "--case", "a", "--models", "dmd", "--out", o]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"nx": 7, "unknown": 1}"#).unwrap();
    let out = cckm(&["run-case", "--case", "a", "--config", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));
    assert_eq!(cckm(&["fit", "--data", dir.path().join("missing").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn run_case_writes_artifacts_and_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("run");
    let out = cckm(&["run-case", "--case", "b", "--config", &cfg, "--models", "cckm-level,dmdc", "--nx", "5", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("cckm-level"));
    let table = fs::read_to_string(out_dir.join("table1.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "model,p_mae_bar,p_fpce_pct,sw_mae,sw_fpce_pct,note");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("cckm-level,") && rows[2].starts_with("dmdc,"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["nx"], 5);
    assert_eq!(manifest["config"]["train_steps"], 12);
    let traj = fs::read_to_string(out_dir.join("trajectory_pressure.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap().split(',').count(), 2 + 25);
}

#[test]
fn stages_compose_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let data = dir.path().join("data");
    let d = data.to_str().unwrap();
    let out = cckm(&["simulate", "--case", "a", "--config", &cfg, "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["scenario.json", "schedule.csv", "trajectory_pressure.csv", "trajectory_saturation.csv", "manifest.json"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let out = cckm(&["fit", "--data", d, "--models", "dmdc,cckm-delta"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("models/pressure_cckm-delta.cckm").exists());
    assert!(data.join("models/saturation_dmdc.cckm.json").exists());

    let eval_dir = dir.path().join("eval");
    let out = cckm(&["evaluate", "--data", d, "--out", eval_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(eval_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["reports"].as_array().unwrap().len(), 8);
    assert_eq!(summary["table"].as_array().unwrap().len(), 2);
    assert_eq!(summary["table"][0]["kind"], "dmdc");

    // evaluating without any models is a configuration error
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = cckm(&["evaluate", "--data", d, "--models-dir", empty.to_str().unwrap(), "--out", eval_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        assert!(cckm(&["run-case", "--case", "a", "--config", &cfg, "--out", o.to_str().unwrap()]).status.success());
    }
    for f in ["summary.json", "table1.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
