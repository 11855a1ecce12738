use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use shapegrasp::raster::Mask;
use shapegrasp::scene::{write_mask_png, write_scene, ScenePaths};
use shapegrasp::synth::Suite;
use shapegrasp::RunReport;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapegrasp"))
}

fn fixture(dir: &Path, object: &str) -> ScenePaths {
    let spec = Suite::shipped().object(object).unwrap().clone();
    write_scene(&dir.join(object.replace(' ', "_")), &spec.generate().unwrap().scene).unwrap()
}

fn scene_args(p: &ScenePaths) -> Vec<String> {
    let mut v = vec!["--mask".into(), s(&p.mask), "--rgb".into(), s(&p.rgb)];
    if let Some(d) = &p.depth {
        v.extend(["--depth".into(), s(d)]);
    }
    if let Some(c) = &p.confidence {
        v.extend(["--conf".into(), s(c)]);
    }
    if let Some(i) = &p.intrinsics {
        v.extend(["--intrinsics".into(), s(i)]);
    }
    v
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn run_case(p: &ScenePaths, object: &str, task: &str, extra: &[&str]) -> (Output, Option<RunReport>) {
    let out = bin()
        .arg("run")
        .args(scene_args(p))
        .args(["--object", object, "--task", task])
        .args(extra)
        .output()
        .unwrap();
    let report = RunReport::from_json(&String::from_utf8_lossy(&out.stdout)).ok();
    (out, report)
}

fn stderr_json(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stderr)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|_| panic!("stderr line is not JSON: {l}")))
        .collect()
}

#[test]
fn hammer_handed_over_by_the_head() {
    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "hammer");
    let svg = dir.path().join("overlay.svg");
    let (out, report) = run_case(&p, "hammer", "hand it over", &["--svg", &s(&svg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report.unwrap();
    assert_eq!(r.selected_label.as_deref(), Some("head"));
    assert!(r.grasp.position_m.is_some());
    assert!(r.timings_ms.values().all(|&t| t >= 0.0));
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "hammer");
    let a = run_case(&p, "hammer", "hammer a nail", &[]).1.unwrap();
    let b = run_case(&p, "hammer", "hammer a nail", &[]).1.unwrap();
    assert_eq!(a.canonical_json(), b.canonical_json());
    assert_eq!(RunReport::from_json(&a.to_json()).unwrap().canonical_json(), a.canonical_json());
}

#[test]
fn single_part_object_exits_2() {
    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "bowl");
    let (out, report) = run_case(&p, "bowl", "carry it", &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report.unwrap();
    assert!(r.degenerate);
    assert!(r.grasp.position_m.is_some());
}

#[test]
fn missing_mask_is_a_usage_error() {
    let out = bin().args(["run", "--rgb", "x.png", "--object", "a", "--task", "b"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let e = &stderr_json(&out)[0];
    assert_eq!(e["error"], "UsageError");
    assert!(e["message"].as_str().unwrap().contains("--mask"));
}

#[test]
fn unreadable_inputs_are_json_errors() {
    let out = bin()
        .args(["run", "--mask", "/nonexistent/m.png", "--rgb", "x.png", "--object", "a", "--task", "b"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)[0]["error"], "IoError");

    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "hammer");
    let out = bin().args(["decompose", "--mask", &s(&p.mask), "--mode", "3d"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)[0]["error"], "InvalidInput");
}

fn l_shape(path: &Path) {
    let mut m = Mask::filled(200, 200, false);
    for r in 20..180 {
        for c in 20..180 {
            if c < 60 || r >= 140 {
                m.set(r, c, true);
            }
        }
    }
    write_mask_png(path, &m).unwrap();
}

fn decompose(args: &[&str]) -> (Output, Value) {
    let out = bin().arg("decompose").args(args).output().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out, v)
}

#[test]
fn l_shape_splits_in_two() {
    let dir = TempDir::new().unwrap();
    let mask = dir.path().join("l.png");
    l_shape(&mask);
    let (out, v) = decompose(&["--mask", &s(&mask), "--mode", "2d", "--gamma-2d", "0.15"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["decomposition"]["parts"].as_array().unwrap().len(), 2);
    assert_eq!(v["selection"]["reason"], "Forced2D");
}

#[test]
fn auto_without_depth_forces_2d() {
    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "hammer");
    let (out, v) = decompose(&["--mask", &s(&p.mask), "--mode", "auto"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["selection"]["reason"], "Forced2D");
    assert_eq!(v["decomposition"]["source"], "TwoD");
}

#[test]
fn forced_3d_warns_when_auto_would_reject() {
    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "wine bottle");
    let mut args = scene_args(&p);
    args.extend(["--mode".into(), "3d".into(), "--alpha".into(), "0.85".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let (out, v) = decompose(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(v["selection"]["reason"], "Forced3D");
    assert!((v["selection"]["conf_fraction"].as_f64().unwrap() - 0.62).abs() < 1e-9);
    let warnings = stderr_json(&out);
    assert!(warnings.iter().any(|w| w["warning"].as_str().unwrap().contains("auto mode would reject")));
}

#[test]
fn config_file_defaults_yield_to_flags() {
    let dir = TempDir::new().unwrap();
    let p = fixture(dir.path(), "hammer");
    let cfg = dir.path().join("sg.conf");
    std::fs::write(&cfg, "# prefer the image outline\nmode = 2d\ngamma_2d = 0.15\n").unwrap();
    let mut base = scene_args(&p);
    base.retain(|a| a != "--rgb" && !a.ends_with("rgb.png"));
    base.extend(["--config".into(), s(&cfg)]);
    let base: Vec<&str> = base.iter().map(String::as_str).collect();

    let (_, v) = decompose(&base);
    assert_eq!(v["decomposition"]["source"], "TwoD");
    let mut flagged = base.clone();
    flagged.extend(["--mode", "3d"]);
    let (_, v) = decompose(&flagged);
    assert_eq!(v["decomposition"]["source"], "ThreeD");

    std::fs::write(&cfg, "colour = red\n").unwrap();
    let (out, _) = decompose(&base);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)[0]["error"], "UsageError");
}

#[test]
fn reasoning_flags_reach_the_chain() {
    let dir = TempDir::new().unwrap();
    let bottle = fixture(dir.path(), "wine bottle");
    let (_, r) = run_case(&bottle, "wine bottle", "pour wine", &["--max-gripper-width", "60"]);
    assert_eq!(r.unwrap().selected_label.as_deref(), Some("neck"));

    let iron = fixture(dir.path(), "soldering iron");
    let (_, r) = run_case(&iron, "soldering iron", "hand it over", &["--attr", "hot=true"]);
    assert_eq!(r.unwrap().selected_label.as_deref(), Some("handle"));

    let hammer = fixture(dir.path(), "hammer");
    let (_, r) = run_case(&hammer, "hammer", "hand it over", &["--no-object-name", "--stages", "scores-only"]);
    let r = r.unwrap();
    assert_eq!(r.transcript.exchanges.len(), 1);
    assert!(r.selected_label.is_none());
    let graph: Value = serde_json::from_str(r.graph.get()).unwrap();
    assert!(graph["object"].is_null());
}

fn write_suite(dir: &Path, names: &[&str]) -> PathBuf {
    let mut suite = Suite::shipped();
    suite.objects.retain(|o| names.contains(&o.name.as_str()));
    let path = dir.join("suite.json");
    std::fs::write(&path, serde_json::to_string(&suite).unwrap()).unwrap();
    path
}

#[test]
fn bench_shipped_suite() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("eval.json");
    let out = bin()
        .args(["bench", "--ablation", "--out", &s(&json)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["part_selection"], 1.0);
    let ab = &v["ablation"];
    assert!(ab["full"].as_f64() >= ab["scores-only"].as_f64());
    assert!(String::from_utf8_lossy(&out.stdout).contains("part selection 1.00"));
}

#[test]
fn bench_sweep_rows() {
    let dir = TempDir::new().unwrap();
    let suite = write_suite(dir.path(), &["screwdriver"]);
    let json = dir.path().join("eval.json");
    let out = bin()
        .args(["bench", "--suite", &s(&suite), "--sweep", "0.01:0.35:0.025", "--out", &s(&json)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["sweeps"][0]["rows"].as_array().unwrap().len(), 14);
}
