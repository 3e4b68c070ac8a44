use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn surfseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfseg")).args(args).output().unwrap()
}

fn small_config(dir: &Path, seed_radius: f64) -> String {
    let cfg = format!(
        r#"{{
  "phantom": {{"kind": "one_ball", "radius": 0.6, "dims": [24, 24, 24], "domain": [[-1, -1, -1], [1, 1, 1]]}},
  "seeds": [{{"shape": "sphere", "center": [0.02, 0.01, 0.0], "radius": {seed_radius}, "edge_length": 0.15}}],
  "run": {{"sigma": 1.0, "lambda": 20.0, "tau0": 1e-3, "max_steps": 5,
          "detection": {{"a": 0.1}}}}
}}"#
    );
    let p = dir.join("cfg.json");
    fs::write(&p, cfg).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn phantom_writes_header_and_payload() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("balls");
    let o = surfseg(&["phantom", "--kind", "two_balls", "--dims", "100x60x60", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let raw = fs::read(dir.path().join("balls.raw")).unwrap();
    assert_eq!(raw.len(), 100 * 60 * 60 * 4);
    let header: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("balls.json")).unwrap()).unwrap();
    assert_eq!(header["dims"], serde_json::json!([100, 60, 60]));
}

#[test]
fn segment_is_deterministic_and_mesh_info_reports_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0.4);
    let mut objs = Vec::new();
    for k in 0..2 {
        let prefix = dir.path().join(format!("run{k}"));
        let o = surfseg(&["segment", "--config", &cfg, "--out-prefix", prefix.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("run{k}.report.json"))).unwrap()).unwrap();
        assert_eq!(report["steps"], 5);
        objs.push(fs::read_to_string(dir.path().join(format!("run{k}.obj"))).unwrap());
    }
    assert_eq!(objs[0], objs[1]);
    let obj = dir.path().join("run0.obj");
    let o = surfseg(&["mesh-info", "--mesh", obj.to_str().unwrap()]);
    assert!(o.status.success());
    let info: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(info[0]["euler"], 2);
    assert_eq!(info[0]["genus"], 0);
    assert_eq!(info[0]["closed"], true);
}

#[test]
fn export_stl_has_binary_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0.4);
    let prefix = dir.path().join("seg");
    let o = surfseg(&["segment", "--config", &cfg, "--out-prefix", prefix.to_str().unwrap(), "--max-steps", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let obj = dir.path().join("seg.obj");
    let stl = dir.path().join("seg.stl");
    let o = surfseg(&["export", "--mesh", obj.to_str().unwrap(), "--out", stl.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(&stl).unwrap();
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    assert!(n > 0);
    assert_eq!(bytes.len(), 84 + 50 * n);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = surfseg(&["segment", "--config", missing.to_str().unwrap(), "--out-prefix", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"seeds": [], "unexpected": true}"#).unwrap();
    let o = surfseg(&["segment", "--config", bad.to_str().unwrap(), "--out-prefix", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = surfseg(&["phantom", "--kind", "cube", "--dims", "4x4x4", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = surfseg(&["phantom", "--kind", "one_ball", "--dims", "4x4", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_run_exits_with_three_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // the seed encloses the whole image, so the outer region is empty
    let cfg = small_config(dir.path(), 3.0);
    let prefix = dir.path().join("fail");
    let o = surfseg(&["segment", "--config", &cfg, "--out-prefix", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("fail.obj").exists());
    let report = fs::read_to_string(dir.path().join("fail.report.json")).unwrap();
    assert!(report.contains("error"));
}
