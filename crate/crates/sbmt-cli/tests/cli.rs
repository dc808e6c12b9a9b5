use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sbmt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbmt")).args(args).current_dir(dir).env_remove("SBMT_EPS").output().unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.pgm")).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn mesh_writes_off_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = sbmt(&["mesh", "--input", &fixture("star"), "--out", "star.off"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let off = std::fs::read_to_string(dir.path().join("star.off")).unwrap();
    assert!(off.starts_with("OFF"));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("star.off.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "mesh");
    assert_eq!(m["thresholds"]["a"], 0.26);
    assert_eq!(m["thresholds"]["b"], 0.125);
    assert_eq!(m["thresholds"]["c"], 0.183);
    assert!((m["thresholds"]["edge_length"].as_f64().unwrap() - 0.45f64.sqrt()).abs() < 1e-12);
    assert_eq!(m["eps"], 1e-9);
    assert!(m["version"].is_string());
    assert_eq!(m["outputs"][0], "star.off");
}

#[test]
fn inadmissible_thresholds_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sbmt(&["mesh", "--input", &fixture("star"), "--a", "0.3", "--b", "0.2", "--out", "x.off"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("b ≥ a/2"), "{}", stderr(&o));
    assert!(!dir.path().join("x.off").exists());
}

#[test]
fn verify_table_reports_zero_defects() {
    let dir = tempfile::tempdir().unwrap();
    let o = sbmt(&["verify-table"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains(" 0 defects"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sbmt(&["mesh", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sbmt(&["mesh", "--input", "nope.pgm", "--out", "x.off"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for (out, threads) in [("a.off", "1"), ("b.off", "4")] {
        let o = sbmt(&["--threads", threads, "mesh", "--input", &fixture("y"), "--out", out, "--check-determinism", "2"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = std::fs::read(dir.path().join("a.off")).unwrap();
    let b = std::fs::read(dir.path().join("b.off")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# thresholds\na = 0.3\nb = 0.2\n").unwrap();
    let bad = sbmt(&["--config", "run.cfg", "mesh", "--fixture", "star:60", "--out", "x.off"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let ok = sbmt(&["--config", "run.cfg", "mesh", "--fixture", "star:60", "--b", "0.14", "--out", "x.off"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let m = std::fs::read_to_string(dir.path().join("x.off.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&m).unwrap();
    assert_eq!(m["thresholds"]["a"], 0.3);
    assert_eq!(m["thresholds"]["b"], 0.14);
}

#[test]
fn quality_hist_render_and_heat_chain() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = sbmt(args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    };
    run(&["mesh", "--fixture", "droplet:60", "--domain", "--classes", "c.csv", "--out", "d.off"]);
    run(&["quality", "d.off", "--csv", "q.csv"]);
    run(&["hist", "d.off", "--csv", "h.csv", "--svg", "h.svg"]);
    run(&["render", "d.off", "--svg", "d.svg", "--color-by", "class", "--classes", "c.csv"]);
    run(&["heat", "d.off", "--t", "0.01", "--snapshots", "0.005,0.01", "--out", "heat"]);
    run(&["export", "d.off", "--out", "d.obj"]);
    for artifact in ["d.off", "q.csv", "h.csv", "d.svg", "heat_trace.csv", "d.obj"] {
        assert!(dir.path().join(format!("{artifact}.manifest.json")).exists(), "{artifact}");
    }
    let q = std::fs::read_to_string(dir.path().join("q.csv")).unwrap();
    assert!(q.starts_with("triangles,min_angle_deg"));
    let svg = std::fs::read_to_string(dir.path().join("d.svg")).unwrap();
    assert!(svg.contains("<polygon"));
    let trace = std::fs::read_to_string(dir.path().join("heat_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 12);
    assert!(dir.path().join("heat_t0.005.csv").exists() && dir.path().join("heat_t0.01.svg").exists());
    let heat: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("heat_trace.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(heat["stats"]["peak_strictly_decreasing"], true);
}

#[test]
fn eps_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sbmt"))
        .args(["--eps", "1e-8", "trace", "--fixture", "y:60", "--out", "y.txt"])
        .current_dir(dir.path())
        .env("SBMT_EPS", "1e-7")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("y.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["eps"], 1e-8);
}

#[test]
fn edge_length_presets_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.cfg"), "e = sqrt0.7\n").unwrap();
    let o = sbmt(&["--config", "p.cfg", "mesh", "--fixture", "y:60", "--out", "y.off"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("y.off.manifest.json")).unwrap()).unwrap();
    assert!((m["thresholds"]["edge_length"].as_f64().unwrap() - 0.7f64.sqrt()).abs() < 1e-12);
    assert_eq!(sbmt(&["mesh", "--fixture", "y:60", "--e", "sqrt", "--out", "y.off"], dir.path()).status.code(), Some(1));
}
