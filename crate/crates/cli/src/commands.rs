use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use shapegrasp::eval::{ablation, evaluate, parse_gamma_range, render_table, sweep_suite};
use shapegrasp::graph::{build_graph, render_overlay};
use shapegrasp::pipeline::{decompose_scene, describe_parts, run, RunRequest, SelectionSummary, Timings};
use shapegrasp::raster::Raster;
use shapegrasp::reasoner::{BackendKind, ChatBackend, HttpBackend, MockBackend, Rulebook};
use shapegrasp::scene::{load_float_raster, load_intrinsics, load_mask, load_rgb, write_scene, DepthData, ScenePaths};
use shapegrasp::synth::Suite;
use shapegrasp::{Decomposition, Error, PipelineConfig, ReasonerConfig, Result, SceneInput};

use crate::args::{attr_map, BenchArgs, DecomposeArgs, GenerateArgs, GeometryArgs, ReasonerArgs, RunArgs, SceneArgs};

/// Process exit status for a finished command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Degenerate,
}

const PLACEHOLDER_RGB: [u8; 3] = [128, 128, 128];

fn load_inputs(s: &SceneArgs, rgb: Option<&Path>) -> Result<SceneInput> {
    let mask = load_mask(&s.mask)?;
    let rgb = match rgb {
        Some(p) => load_rgb(p)?,
        None => Raster::filled(mask.width(), mask.height(), PLACEHOLDER_RGB),
    };
    let depth = match &s.depth {
        None => {
            if s.conf.is_some() || s.intrinsics.is_some() {
                return Err(Error::InvalidInput("--conf and --intrinsics need --depth".into()));
            }
            None
        }
        Some(dp) => {
            let depth = load_float_raster(dp)?;
            let confidence = match &s.conf {
                Some(cp) => load_float_raster(cp)?,
                None => Raster::filled(depth.width(), depth.height(), 1.0),
            };
            let ip = s
                .intrinsics
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("--depth needs --intrinsics".into()))?;
            Some(DepthData { depth, confidence, intrinsics: load_intrinsics(ip)? })
        }
    };
    SceneInput::new(rgb, mask, depth)
}

fn pipeline_config(g: &GeometryArgs) -> Result<PipelineConfig> {
    let mut c = PipelineConfig { mode: g.mode, voxel_size_m: g.voxel_size, strict_depth: g.strict_depth, ..Default::default() };
    let s = &mut c.selector;
    s.omega = g.omega.unwrap_or(s.omega);
    s.alpha = g.alpha.unwrap_or(s.alpha);
    s.gamma_init_2d = g.gamma_2d.unwrap_or(s.gamma_init_2d);
    s.gamma_init_3d = g.gamma_3d.unwrap_or(s.gamma_init_3d);
    s.gamma_step = g.gamma_step.unwrap_or(s.gamma_step);
    c.epsilon_pct = g.epsilon_pct.unwrap_or(c.epsilon_pct);
    c.validate()?;
    Ok(c)
}

fn reasoner_setup(r: &ReasonerArgs) -> Result<(Box<dyn ChatBackend>, ReasonerConfig)> {
    let mut cfg = ReasonerConfig { backend: r.backend, stages: r.stages, ..Default::default() };
    if let Some(n) = r.max_retries {
        cfg.max_retries = n;
    }
    let backend: Box<dyn ChatBackend> = match r.backend {
        BackendKind::Mock => {
            let book = match &r.rulebook {
                Some(p) => Rulebook::load(p)?,
                None => Rulebook::shipped(),
            };
            Box::new(MockBackend::new(book).strict(r.strict_rulebook))
        }
        BackendKind::Http => {
            let http = HttpBackend::from_env(r.model.as_deref())?;
            cfg.model_id = http.model().to_string();
            Box::new(http)
        }
    };
    Ok((backend, cfg))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn for_degenerate(degenerate: bool) -> Outcome {
    if degenerate {
        Outcome::Degenerate
    } else {
        Outcome::Ok
    }
}

pub fn cmd_run(a: &RunArgs) -> Result<Outcome> {
    let scene = load_inputs(&a.scene, Some(&a.rgb))?;
    let pipeline = pipeline_config(&a.geometry)?;
    let (backend, mut reasoner) = reasoner_setup(&a.reasoner)?;
    reasoner.include_object_name = !a.no_object_name;
    reasoner.max_gripper_width_px = a.max_gripper_width;
    reasoner.extra_object_attrs = attr_map(&a.attrs);
    let paths = ScenePaths {
        mask: a.scene.mask.clone(),
        rgb: a.rgb.clone(),
        depth: a.scene.depth.clone(),
        confidence: a.scene.conf.clone(),
        intrinsics: a.scene.intrinsics.clone(),
    };
    let req = RunRequest {
        scene: &scene,
        paths: Some(paths),
        object: &a.object,
        task: &a.task,
        pipeline: &pipeline,
        reasoner: &reasoner,
    };
    let out = run(&req, backend.as_ref())?;
    for w in &out.report.warnings {
        eprintln!("{}", serde_json::json!({ "warning": w }));
    }
    if let Some(p) = &a.svg {
        let svg = render_overlay(&out.graph, Some(out.report.selected_node));
        fs::write(p, svg).map_err(|e| io_error(p, e))?;
    }
    write_or_print(a.out.as_deref(), &out.report.to_json())?;
    Ok(for_degenerate(out.report.degenerate))
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    schema_version: u32,
    selection: SelectionSummary,
    decomposition: &'a Decomposition,
    warnings: &'a [String],
    timings_ms: Timings,
}

pub fn cmd_decompose(a: &DecomposeArgs) -> Result<Outcome> {
    let scene = load_inputs(&a.scene, a.rgb.as_deref())?;
    let pipeline = pipeline_config(&a.geometry)?;
    let mut timings = Timings::new();
    let out = decompose_scene(&scene, &pipeline, &mut timings)?;
    for w in &out.warnings {
        eprintln!("{}", serde_json::json!({ "warning": w }));
    }
    let chosen = &out.selection.chosen;
    if let Some(p) = &a.svg {
        let attrs = describe_parts(&out.scene, chosen, pipeline.epsilon_pct)?;
        let graph = build_graph(chosen, attrs, None, &Default::default(), (out.scene.width, out.scene.height));
        fs::write(p, render_overlay(&graph, None)).map_err(|e| io_error(p, e))?;
    }
    let report = DecomposeReport {
        schema_version: shapegrasp::pipeline::REPORT_SCHEMA_VERSION,
        selection: (&out.selection).into(),
        decomposition: chosen,
        warnings: &out.warnings,
        timings_ms: timings,
    };
    let json = serde_json::to_string_pretty(&report).expect("decomposition serialises");
    write_or_print(a.out.as_deref(), &json)?;
    Ok(for_degenerate(chosen.degenerate))
}

fn load_suite(path: Option<&PathBuf>) -> Result<Suite> {
    match path {
        Some(p) => Suite::load(p),
        None => Ok(Suite::shipped()),
    }
}

pub fn cmd_bench(a: &BenchArgs) -> Result<Outcome> {
    let suite = load_suite(a.suite.as_ref())?;
    let (backend, reasoner) = reasoner_setup(&a.reasoner)?;
    let pipeline = PipelineConfig { mode: a.mode, ..Default::default() };
    let mut report = evaluate(&suite, &pipeline, &reasoner, backend.as_ref())?;
    if let Some(range) = &a.sweep {
        report.sweeps = sweep_suite(&suite, &parse_gamma_range(range)?, pipeline.voxel_size_m)?;
    }
    if a.ablation {
        report.ablation = ablation(&suite, &pipeline, &reasoner, backend.as_ref())?;
    }
    if let Some(p) = &a.out {
        let json = serde_json::to_string_pretty(&report).expect("report serialises");
        fs::write(p, json).map_err(|e| io_error(p, e))?;
    }
    write_or_print(a.table.as_deref(), &render_table(&report))?;
    Ok(Outcome::Ok)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<Outcome> {
    let suite = load_suite(a.suite.as_ref())?;
    let spec = suite
        .object(&a.object)
        .ok_or_else(|| Error::InvalidInput(format!("suite has no object {:?}", a.object)))?;
    let mut scene = spec.generate()?.scene;
    if a.no_depth {
        scene.depth = None;
    }
    let paths = write_scene(&a.out_dir, &scene)?;
    let spec_path = a.out_dir.join("object.json");
    let spec_json = serde_json::to_string_pretty(spec).expect("spec serialises");
    fs::write(&spec_path, spec_json).map_err(|e| io_error(&spec_path, e))?;
    println!("{}", serde_json::to_string_pretty(&paths).expect("paths serialise"));
    Ok(Outcome::Ok)
}
