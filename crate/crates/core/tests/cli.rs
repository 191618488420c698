use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn ybforge(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ybforge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("YBFORGE_TOL")
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn build_gl11_writes_five_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("gl11.json");
    let out = ybforge(&["build", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let op = read_json(dir.path().join("operator.json"));
    let mut values: Vec<f64> = op["entries"].as_array().unwrap().iter().map(|e| e["re"].as_f64().unwrap()).collect();
    values.sort_by(f64::total_cmp);
    assert_eq!(values, vec![-0.5, 1.0, 1.0, 1.5, 2.0]);
}

#[test]
fn build_anyonic_has_cube_root_of_unity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("anyonic.json");
    assert_eq!(ybforge(&["build", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(0));
    let op = read_json(dir.path().join("operator.json"));
    let w = (2.0 * std::f64::consts::PI / 3.0).sin();
    let found = op["entries"].as_array().unwrap().iter().any(|e| {
        (e["re"].as_f64().unwrap() + 0.5).abs() < 1e-15 && (e["im"].as_f64().unwrap() - w).abs() < 1e-15
    });
    assert!(found);
}

#[test]
fn trivial_q1_build_is_flip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flip.json");
    fs::write(
        &cfg,
        r#"{"group":{"moduli":[0,0]},"factor":{"kind":"trivial"},
            "basis":[{"label":1,"grade":[1,0]},{"label":2,"grade":[0,1]}],"q":{"re":1.0,"im":0.0}}"#,
    )
    .unwrap();
    assert_eq!(ybforge(&["build", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(0));
    let op = read_json(dir.path().join("operator.json"));
    for e in op["entries"].as_array().unwrap() {
        let (i, o) = (&e["in"], &e["out"]);
        assert_eq!(i[0], o[1]);
        assert_eq!(i[1], o[0]);
        assert_eq!(e["re"].as_f64(), Some(1.0));
    }
    assert_eq!(op["entries"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("gl11.json");
    let out = ybforge(&["verify", "--config", cfg.to_str().unwrap(), "--which", "qybe"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rep = read_json(dir.path().join("report_qybe.json"));
    assert!(rep["residual"].as_f64().unwrap() < 1e-9);

    let cfg = config("odd_first_literal.json");
    let out = ybforge(&["verify", "--config", cfg.to_str().unwrap(), "--which", "qybe"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let rep = read_json(dir.path().join("report_qybe.json"));
    assert!(rep["residual"].as_f64().unwrap() > 0.1);
}

#[test]
fn malformed_grade_length_is_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"group":{"moduli":[2]},"factor":{"kind":"super"},
            "basis":[{"label":1,"grade":[0,1]},{"label":2,"grade":[1]}],"q":{"re":2.0,"im":0.0}}"#,
    )
    .unwrap();
    let out = ybforge(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_field_is_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let mut v = read_json(config("gl11.json"));
    v["colour"] = Value::from(1);
    fs::write(&cfg, v.to_string()).unwrap();
    assert_eq!(ybforge(&["build", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn reduce_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (name, even) in [("gl11.json", false), ("z2z2_reduction.json", false), ("multiparameter.json", true)] {
        let cfg = config(name);
        let out = ybforge(&["reduce", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(0), "{name}");
        let rep = read_json(dir.path().join("report_reduction.json"));
        assert_eq!(rep["even_factor"].as_bool(), Some(even), "{name}");
        assert_eq!(rep["sigma_gauge"].as_str(), Some("upper-generator"));
        let worst = rep["blocks"].as_array().unwrap().iter().map(|b| b["residual"].as_f64().unwrap()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{name}: {worst}");
    }
    let cfg = config("odd_first_literal.json");
    let out = ybforge(&["reduce", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(read_json(dir.path().join("report_reduction.json"))["pass"].as_bool(), Some(false));
}

#[test]
fn calculus_check_and_emit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("ungraded_calculus.json");
    let out = ybforge(&["calculus", "--config", cfg.to_str().unwrap(), "--action", "check"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rep = read_json(dir.path().join("report_calculus.json"));
    let conds = rep["conditions"].as_array().unwrap();
    assert_eq!(conds.len(), 6);
    assert!(conds.iter().all(|c| c["residual"].as_f64().unwrap() < 1e-9));

    let out = ybforge(&["calculus", "--config", cfg.to_str().unwrap(), "--action", "emit"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("relations.txt")).unwrap();
    assert!(text.contains("x2 x1 = 0.7692307692307692 x1 x2"), "{text}");
    assert!(text.contains("d1 x1 = 1 + 1.6900000000000002 x1 d1 + 0.6900000000000002 x2 d2"), "{text}");
    let rel = read_json(dir.path().join("relations.json"));
    for key in ["plane", "nilpotent", "xd", "dd", "dx"] {
        assert!(rel.get(key).is_some(), "{key}");
    }
    assert_eq!(read_json(dir.path().join("report_display.json"))["pass"].as_bool(), Some(true));

    let cfg = config("gl11.json");
    assert_eq!(ybforge(&["calculus", "--config", cfg.to_str().unwrap(), "--action", "emit"], dir.path()).status.code(), Some(0));
    assert_eq!(read_json(dir.path().join("relations.json"))["nilpotent"], serde_json::json!([2]));
}

#[test]
fn built_operator_reverifies_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("multiparameter.json");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(ybforge(&["verify", "--config", cfg, "--which", "qybe"], dir.path()).status.code(), Some(0));
    let direct = read_json(dir.path().join("report_qybe.json"));
    assert_eq!(ybforge(&["build", "--config", cfg], dir.path()).status.code(), Some(0));
    let op = dir.path().join("operator.json");
    let out = ybforge(&["verify", "--config", cfg, "--which", "qybe", "--operator", op.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let again = read_json(dir.path().join("report_qybe.json"));
    assert!((direct["residual"].as_f64().unwrap() - again["residual"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn tolerance_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("odd_first_literal.json");
    let cfg = cfg.to_str().unwrap();
    // residual 9 passes only under a huge tolerance
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ybforge"));
        cmd.args(["verify", "--config", cfg, "--which", "qybe", "--out"]).arg(dir.path()).args(extra);
        match env {
            Some(v) => cmd.env("YBFORGE_TOL", v),
            None => cmd.env_remove("YBFORGE_TOL"),
        };
        cmd.output().unwrap().status.code()
    };
    assert_eq!(run(&[], None), Some(1));
    assert_eq!(run(&[], Some("100")), Some(0));
    assert_eq!(run(&["--tol", "1e-9"], Some("100")), Some(1));
    assert_eq!(run(&["--tol", "100"], None), Some(0));
    assert_eq!(run(&[], Some("abc")), Some(2));
}
