//! End-to-end tests of the `qlev` binary: exit codes, output files, the
//! frozen CSV schema, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn fixture(name: &str) -> String {
    repo_root().join("fixtures").join(name).to_string_lossy().into_owned()
}

fn qlev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlev")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn trace_config(function: &str, forms: &str, levels: &str) -> String {
    format!(
        r#"{{
            "function": "{function}",
            "plane": {{"forms": {forms}, "offsets": [0.0, 0.0]}},
            "levels": {levels},
            "window": 1.0,
            "grid_step": 0.05,
            "tracer": {{"step": 0.01, "closure_tol": 1e-5, "s_min": 0.03, "s_max": 150.0, "grad_floor": 1e-6}}
        }}"#
    )
}

#[test]
fn trace_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "trace.json",
        &trace_config(&fixture("separable.json"), "[[0,0,1,0],[0,0,0,1]]", "[1.0]"),
    );
    let out = dir.path().join("out");
    let res = qlev(&["trace", "--config", &cfg, "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("trajectories.json").is_file());
    assert!(out.join("trace.svg").is_file());
}

#[test]
fn empty_level_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "empty.json",
        &trace_config(&fixture("separable.json"), "[[0,0,1,0],[0,0,0,1]]", "[5.0]"),
    );
    let res = qlev(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn degenerate_plane_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "degenerate.json",
        &trace_config(&fixture("separable.json"), "[[0,0,1,0],[0,0,1,0]]", "[1.0]"),
    );
    let res = qlev(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn missing_config_exits_1() {
    let res = qlev(&["trace", "--config", "/nonexistent/config.json"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn fixture_without_m_exits_1_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad_fixture.json", r#"{"harmonics": []}"#);
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &trace_config(&bad, "[[0,0,1,0],[0,0,0,1]]", "[1.0]"),
    );
    let res = qlev(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains('m'), "stderr does not name the missing field: {stderr}");
}

#[test]
fn trace_with_seed_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seeded.json",
        &trace_config(&fixture("separable.json"), "[[0,0,1,0],[0,0,0,1]]", "[1.0]"),
    );
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let res = qlev(&[
            "trace",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        assert_eq!(res.status.code(), Some(0));
        outputs.push(std::fs::read(out.join("trajectories.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "seeded reruns differ");
}

#[test]
fn scan_writes_frozen_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{
            "function": "{}",
            "grid": {{
                "base_forms": [{{"coefficients": [0,0,1,0]}}, {{"coefficients": [0,0,0,1]}}],
                "perturb_generators": [{{"coefficients": [1,0,0,0]}}, {{"coefficients": [0,1,0,0]}}],
                "offsets": [0.0, 0.0],
                "radius": 0.01,
                "resolution": 3
            }},
            "levels": [1.0],
            "window": 1.0,
            "grid_step": 0.05,
            "tracer": {{"step": 0.01, "closure_tol": 1e-5, "s_min": 0.03, "s_max": 150.0, "grad_floor": 1e-6}},
            "workers": 2
        }}"#,
        fixture("separable.json")
    );
    let cfg = write_config(dir.path(), "scan.json", &body);
    let mut csvs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let res = qlev(&["scan", "--config", &cfg, "--out", out.to_str().unwrap(), "--svg"]);
        assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
        assert!(out.join("zones.json").is_file());
        assert!(out.join("zones_0.svg").is_file());
        csvs.push(std::fs::read_to_string(out.join("scan.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "scan reruns differ");
    let header = csvs[0].lines().next().unwrap();
    assert_eq!(
        header,
        "i,j,s,t,level,kind,n1,n2,n3,n4,residual,orientationSign,seeds,unresolved"
    );
    // 3x3 grid, one level: header + 9 records.
    assert_eq!(csvs[0].lines().count(), 10);
}

#[test]
fn crit_then_render_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "crit.json",
        &trace_config(&fixture("separable.json"), "[[0,0,1,0],[0,0,0,1]]", "[1.0]"),
    );
    let out = dir.path().join("out");
    let res = qlev(&["crit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("critical_points.json").is_file());

    // Render a trace result back to SVG through the render subcommand.
    let res = qlev(&["trace", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let render_body = format!(
        r#"{{
            "function": "{}",
            "render_input": "{}"
        }}"#,
        fixture("separable.json"),
        out.join("trajectories.json").to_string_lossy()
    );
    let render_cfg = write_config(dir.path(), "render.json", &render_body);
    let res = qlev(&["render", "--config", &render_cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("render.svg").is_file());
}
