use std::process::Command;

fn heavywalk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heavywalk"))
}

#[test]
fn lists_presets() {
    let out = heavywalk().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["cor2-rate", "stripthm2a-phase", "lamperti-gamma", "risk-invariance"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn unknown_preset_is_an_error() {
    let out = heavywalk().args(["accept", "no-such-preset"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-preset"));
}

#[test]
fn analytic_preset_passes() {
    let out = heavywalk().args(["accept", "analytic-oracles"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

const TRIVIAL: &str = r#"{
  "name": "unit-drift",
  "model": { "kind": "walk", "law": {
      "pos": { "kind": "constant", "value": 1.0 },
      "neg": { "kind": "zero" },
      "p_pos": 1.0 } },
  "horizon": 1024,
  "replicas": 1,
  "master_seed": 3,
  "checks": [ { "check": "envelope_clean",
      "envelope": { "kind": "upper", "theta": 1.0, "phi": 0.0, "eps": 0.5 },
      "burn_in": 16, "min_clean": 1 } ]
}"#;

#[test]
fn run_config_file_and_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.json");
    std::fs::write(&path, TRIVIAL).unwrap();
    let out = heavywalk().arg("run").arg(&path).env("HEAVYWALK_WORKERS", "2").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));

    // An impossible lower envelope makes the check fail: exit status 1.
    let failing = TRIVIAL.replace(
        r#""kind": "upper", "theta": 1.0, "phi": 0.0, "eps": 0.5"#,
        r#""kind": "lower", "alpha": 0.5, "eps": 0.1"#,
    );
    let path = dir.path().join("fail.json");
    std::fs::write(&path, failing).unwrap();
    let out = heavywalk().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_lists_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let bad = TRIVIAL.replace(r#""replicas": 1"#, r#""replicas": 0"#).replace(r#""horizon": 1024"#, r#""horizon": 1"#);
    std::fs::write(&path, bad).unwrap();
    let out = heavywalk().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("replicas") && err.contains("horizon"), "{err}");
}

#[test]
fn json_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.json");
    std::fs::write(&path, TRIVIAL).unwrap();
    let payload = |workers: &str| {
        let out = heavywalk().args(["run", "--json", "--workers", workers]).arg(&path).output().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["payload"].to_string()
    };
    assert_eq!(payload("1"), payload("3"));
}
