use std::path::PathBuf;

use incsafe::cli::{execute, main_with, run, Pipeline, RunFlags};
use incsafe::config::{ConfigError, ScenarioConfig};
use incsafe::report::ReportBundle;
use incsafe::scenarios::{builtin_config, BUILTIN_NAMES};
use incsafe::svmap::PerturbMode;

fn repo_scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn out_flag(dir: &tempfile::TempDir) -> String {
    dir.path().to_str().unwrap().to_string()
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_with(["incsafe", "all", "/nonexistent/missing.cfg", "--out", &out_flag(&dir)]);
    assert_eq!(code, 2);
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(main_with(["incsafe", "verify", "builtin:example1", "--mode", "sideways"]), 2);
    assert_eq!(main_with(["incsafe", "verify", "builtin:example1", "--eps", "abc"]), 2);
    assert_eq!(main_with(["incsafe", "frobnicate"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let code = main_with([
        "incsafe", "verify", "builtin:example1", "--box-scale=-1", "--out", &out_flag(&dir),
    ]);
    assert_eq!(code, 2);
    let code = main_with([
        "incsafe", "verify", "builtin:example1", "--check", "bogus", "--out", &out_flag(&dir),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_builtin_exits_2() {
    assert_eq!(main_with(["incsafe", "verify", "builtin:nope"]), 2);
}

#[test]
fn example1_strong_falsification() {
    let dir = tempfile::tempdir().unwrap();
    let flags = RunFlags {
        mode: Some(PerturbMode::Strong),
        eps: Some(0.5),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let out = run("builtin:example1", Pipeline::Falsify, &flags).unwrap();
    assert_eq!(out.bundle.exit_code, 1);
    let rec = &out.bundle.falsify[0];
    assert!(rec.falsified);
    let w = rec.witness.as_ref().unwrap();
    assert!(w.start[0].abs() <= 1e-12);
    assert!(w.escape_time <= 0.5);
    assert!(w.exit_depth > w.tau_exit);
    assert_eq!(out.trajectory_paths.len(), 1);
    let traj = std::fs::read_to_string(&out.trajectory_paths[0]).unwrap();
    assert!(traj.starts_with("# t"));
    assert!(traj.lines().count() > 2);

    let json = std::fs::read_to_string(&out.bundle_path).unwrap();
    let back = ReportBundle::from_json(&json).unwrap();
    assert_eq!(back, out.bundle);
    assert!(out.bundle_path.ends_with("example1-falsify.json"));

    // through the binary entry point
    let code = main_with([
        "incsafe", "falsify", "builtin:example1", "--mode", "strong", "--eps", "0.5", "--out",
        &out_flag(&dir),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn example1_nominal_is_not_falsified() {
    let cfg = builtin_config("example1").unwrap();
    let flags = RunFlags {
        mode: Some(PerturbMode::None),
        ..Default::default()
    };
    let (b, files) = execute(&cfg, Pipeline::Falsify, &flags).unwrap();
    assert!(!b.falsify[0].falsified);
    assert!(files.is_empty());
    assert_eq!(b.exit_code, 0);
}

#[test]
fn example2_eqexp2_sigma_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_with([
        "incsafe", "verify", "builtin:example2", "--check", "eqexp2", "--out", &out_flag(&dir),
    ]);
    assert_eq!(code, 0);
    let json = std::fs::read_to_string(dir.path().join("example2-verify.json")).unwrap();
    let b = ReportBundle::from_json(&json).unwrap();
    assert_eq!(b.checks.len(), 1);
    assert_eq!(b.checks[0].id, "eqexp2");
    assert!((b.checks[0].sigma - 1.0).abs() <= 1e-6);
}

#[test]
fn malformed_json_reports_position() {
    let err = ScenarioConfig::from_json("{\n  \"name\": \"x\",\n  \"dim\": ,\n}").unwrap_err();
    match err {
        ConfigError::Parse { line, column, .. } => {
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn unknown_keys_are_listed_together() {
    let mut v: serde_json::Value = serde_json::from_str(&builtin_config("example1").unwrap().to_json()).unwrap();
    v["colour"] = serde_json::json!(1);
    v["perturbation"]["espilon"] = serde_json::json!(0.1);
    v["falsify"]["stps"] = serde_json::json!(3);
    let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
    let ConfigError::Schema(problems) = err else {
        panic!("expected a schema error");
    };
    let text = problems.join("\n");
    for key in ["colour", "espilon", "stps"] {
        assert!(text.contains(key), "{key} missing from {text}");
    }
}

#[test]
fn semantic_problems_are_listed_together() {
    let mut cfg = builtin_config("linear-stable").unwrap();
    cfg.grid = vec![1];
    cfg.region.lo = vec![5.0];
    let err = cfg.validate().unwrap_err();
    let ConfigError::Schema(problems) = err else {
        panic!("expected a schema error");
    };
    assert!(problems.len() >= 2, "{problems:?}");
}

#[test]
fn bundle_records_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = repo_scenarios().join("linear-stable.json");
    let flags = RunFlags {
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let out = run(path.to_str().unwrap(), Pipeline::Verify, &flags).unwrap();
    let cfg = ScenarioConfig::load(&path).unwrap();
    assert_eq!(out.bundle.config_hash, cfg.hash());
    assert_eq!(out.bundle.effective_config_hash, cfg.hash());
    assert_eq!(out.bundle.config_hash.len(), 64);
    assert_eq!(out.bundle.exit_code, 0);
}

#[test]
fn box_scale_changes_effective_hash_only() {
    let cfg = builtin_config("linear-stable").unwrap();
    let flags = RunFlags {
        box_scale: Some(0.5),
        ..Default::default()
    };
    let (b, _) = execute(&cfg, Pipeline::Verify, &flags).unwrap();
    assert_eq!(b.config_hash, cfg.hash());
    assert_ne!(b.effective_config_hash, cfg.hash());
    assert!(b.overrides.contains_key("box-scale"));
}

#[test]
fn shipped_scenarios_match_builtins() {
    for name in BUILTIN_NAMES {
        let path = repo_scenarios().join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, builtin_config(name).unwrap().to_json(), "{name}");
    }
}

#[test]
fn export_writes_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(main_with(["incsafe", "export", "--out", &out_flag(&dir)]), 0);
    for name in BUILTIN_NAMES {
        let p = dir.path().join(format!("{name}.json"));
        let cfg = ScenarioConfig::load(&p).unwrap();
        assert_eq!(cfg, builtin_config(name).unwrap());
    }
}
