use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn dynlock(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynlock")).arg("--out").arg(out).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let seq = data("dsl4.seq");
    let sys = data("tetra4.json");
    let args = ["simulate", "--seq", seq.to_str().unwrap(), "--system", sys.to_str().unwrap(), "--nu", "-1400", "--cycles", "16"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(dynlock(&a, &args).status.success());
    assert!(dynlock(&b, &args).status.success());
    for f in ["trajectory.csv", "spectrum.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    assert!(m["inputs"].as_array().unwrap().iter().all(|h| h["sha256"].is_string()));
}

#[test]
fn missing_input_exits_three_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynlock(dir.path(), &["magnus", "--seq", "/nonexistent/nowhere.seq"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/nowhere.seq"));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["status"], "error");
    assert!(m["inputs"][0]["sha256"].is_null());
}

#[test]
fn unknown_flag_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynlock(dir.path(), &["magnus", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_error_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.seq");
    std::fs::write(&bad, "tau 5u\nd1; p90 q; d1\n").unwrap();
    let out = dynlock(dir.path(), &["magnus", "--seq", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.seq:2:"));
}

#[test]
fn dips_outside_every_root_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let seq = data("dsl4.seq");
    let out = dynlock(dir.path(), &["dips", "--seq", seq.to_str().unwrap(), "--nu-range", "500:2500:41", "--m-max", "3"]);
    assert!(out.status.success());
    assert_eq!(json(&dir.path().join("dips.json")), Value::Array(vec![]));
}

#[test]
fn locking_field_repeats_every_inverse_tau() {
    let dir = tempfile::tempdir().unwrap();
    let seq = data("dsl4.seq");
    let out = dynlock(dir.path(), &["locking-field", "--seq", seq.to_str().unwrap(), "--nu-range", "-25000:25000:21"]);
    assert!(out.status.success());
    let v = json(&dir.path().join("locking_field.json"));
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 21);
    let (first, last) = (&pts[0], &pts[20]);
    let amp = |p: &Value| p["amplitude"].as_f64().unwrap();
    assert!((amp(first) - amp(last)).abs() < 1e-6);
    // ν = 0 sits in the middle and carries no field
    assert!(amp(&pts[10]).abs() < 1e-9);
}

#[test]
fn magnus_table_matches_rationals() {
    let dir = tempfile::tempdir().unwrap();
    let seq = data("dsl4.seq");
    assert!(dynlock(dir.path(), &["magnus", "--seq", seq.to_str().unwrap()]).status.success());
    let v = json(&dir.path().join("magnus.json"));
    let expected = [(0.0, 1.0 / 3.0), (-2.0 / 3.0, 1.0 / 3.0), (0.0, -4.0 / 3.0), (19.0 / 9.0, 19.0 / 18.0)];
    for (row, (x, z)) in v.as_array().unwrap().iter().zip(expected) {
        assert!((row["x"].as_f64().unwrap() - x).abs() < 1e-9);
        assert!(row["y"].as_f64().unwrap().abs() < 1e-9);
        assert!((row["z"].as_f64().unwrap() - z).abs() < 1e-9);
    }
}

#[test]
fn bundled_sequences_parse() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["dsl4.seq", "wahuha.seq", "block8_a.seq", "block8_b.seq"] {
        let seq = data(f);
        let out = dynlock(&dir.path().join(f), &["magnus", "--seq", seq.to_str().unwrap(), "--order", "1"]);
        assert!(out.status.success(), "{f}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let hc = dynlock::sequence::parse_sequence(&std::fs::read_to_string(data("dsl4_hc.seq")).unwrap()).unwrap();
    assert_eq!(hc.channels, ["H", "C"]);
}

#[test]
fn phase_one_search_writes_winners() {
    let dir = tempfile::tempdir().unwrap();
    let sys = data("tetra4.json");
    let out = dynlock(
        dir.path(),
        &["search", "--phase", "1", "--system", sys.to_str().unwrap(), "--nu", "500", "--tau", "2u", "--n-max", "4", "--strategy", "exhaustive:4", "--seed", "3"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let winners = json(&dir.path().join("winners.json"));
    for w in winners.as_array().unwrap() {
        assert!(dir.path().join(w["file"].as_str().unwrap()).exists());
        assert!(w["fidelity"].as_f64().unwrap() >= 0.999);
    }
}
