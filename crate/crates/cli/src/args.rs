use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use shapegrasp::reasoner::BackendKind;
use shapegrasp::{Mode, StageSet};

#[derive(Debug, Parser)]
#[command(name = "shapegrasp", version, about = "Task-oriented grasp planning from part geometry")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: decompose, describe, reason, grasp.
    Run(RunArgs),
    /// Decomposition and 2D/3D choice only; no reasoning.
    Decompose(DecomposeArgs),
    /// Evaluate a synthetic suite.
    Bench(BenchArgs),
    /// Write a synthetic scene from a suite to disk.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Object mask, grayscale PNG/PGM.
    #[arg(long)]
    pub mask: PathBuf,
    /// Depth in metres, PFM or raw float32 with a .json sidecar.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// Per-pixel depth confidence in [0, 1].
    #[arg(long)]
    pub conf: Option<PathBuf>,
    /// Camera intrinsics JSON {fx, fy, cx, cy}.
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long, default_value = "auto")]
    pub mode: Mode,
    #[arg(long)]
    pub epsilon_pct: Option<f64>,
    /// Largest accepted 3D part count.
    #[arg(long)]
    pub omega: Option<usize>,
    /// Smallest accepted confident-depth fraction.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "gamma-2d")]
    pub gamma_2d: Option<f64>,
    #[arg(long = "gamma-3d")]
    pub gamma_3d: Option<f64>,
    #[arg(long)]
    pub gamma_step: Option<f64>,
    /// Voxel edge in metres; derived from the cloud when omitted.
    #[arg(long)]
    pub voxel_size: Option<f64>,
    /// Fail instead of emitting a pose without depth.
    #[arg(long)]
    pub strict_depth: bool,
    /// Key=value file of flag defaults; flags on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReasonerArgs {
    #[arg(long, default_value = "mock")]
    pub backend: BackendKind,
    /// Model name for the http backend.
    #[arg(long)]
    pub model: Option<String>,
    /// Mock rulebook JSON; the shipped one by default.
    #[arg(long)]
    pub rulebook: Option<PathBuf>,
    /// Unknown objects are an error for the mock instead of generic labels.
    #[arg(long)]
    pub strict_rulebook: bool,
    #[arg(long, default_value = "full")]
    pub stages: StageSet,
    #[arg(long)]
    pub max_retries: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long)]
    pub rgb: PathBuf,
    #[arg(long)]
    pub object: String,
    #[arg(long)]
    pub task: String,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub reasoner: ReasonerArgs,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Graph overlay SVG with the selected node highlighted.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub max_gripper_width: Option<f64>,
    /// Withhold the object name from the prompts and graph.
    #[arg(long)]
    pub no_object_name: bool,
    /// Extra object attribute, e.g. `--attr hot=true`. Repeatable.
    #[arg(long = "attr", value_parser = parse_attr)]
    pub attrs: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Colour image; only used for node colours in the overlay.
    #[arg(long)]
    pub rgb: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Suite JSON; the shipped suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    #[command(flatten)]
    pub reasoner: ReasonerArgs,
    /// Also report part counts over `start:stop:step`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Also report part selection for every stage set.
    #[arg(long)]
    pub ablation: bool,
    /// EvalReport JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Text table path; stdout when omitted.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Object name in the suite.
    #[arg(long)]
    pub object: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Skip the depth, confidence and intrinsics files.
    #[arg(long)]
    pub no_depth: bool,
}

fn parse_attr(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().into(), v.trim().into())),
        _ => Err(format!("expected key=value, got {s:?}")),
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let v = v.trim().trim_matches('"');
        out.push((k.trim().replace('_', "-"), v.to_string()));
    }
    Ok(out)
}

/// Turns config entries into flags placed ahead of the real arguments, so
/// anything given on the command line overrides them.
fn config_flags(sub: &str, entries: &[(String, String)]) -> Result<Vec<String>, String> {
    let cmd = Cli::command();
    let sc = cmd.find_subcommand(sub).ok_or_else(|| format!("no subcommand {sub}"))?;
    let mut flags = Vec::new();
    for (k, v) in entries {
        if k == "config" {
            return Err("config files cannot include other config files".into());
        }
        let arg = sc
            .get_arguments()
            .find(|a| a.get_long() == Some(k.as_str()))
            .ok_or_else(|| format!("unknown config key {k:?} for {sub}"))?;
        if arg.get_action().takes_values() {
            flags.push(format!("--{k}"));
            flags.push(v.clone());
        } else {
            match v.as_str() {
                "true" => flags.push(format!("--{k}")),
                "false" => {}
                _ => return Err(format!("config key {k:?} takes true or false")),
            }
        }
    }
    Ok(flags)
}

pub enum Parsed {
    Cli(Box<Cli>),
    /// Help or version output; print and exit 0.
    Display(String),
}

pub fn parse(argv: Vec<String>) -> Result<Parsed, String> {
    let first = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => return Ok(Parsed::Display(e.render().to_string())),
        Err(e) => return Err(e.render().to_string()),
    };
    let (sub, sub_m) = first.subcommand().expect("subcommand is required");
    let config = sub_m
        .try_get_one::<PathBuf>("config")
        .ok()
        .flatten()
        .cloned();
    let matches = match config {
        None => first,
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let flags = config_flags(sub, &read_config(&text)?)?;
            let mut merged = vec![argv[0].clone(), argv[1].clone()];
            merged.extend(flags);
            merged.extend(argv[2..].iter().cloned());
            Cli::command().try_get_matches_from(merged).map_err(|e| e.render().to_string())?
        }
    };
    Cli::from_arg_matches(&matches)
        .map(|c| Parsed::Cli(Box::new(c)))
        .map_err(|e| e.render().to_string())
}

pub fn attr_map(attrs: &[(String, String)]) -> BTreeMap<String, String> {
    attrs.iter().cloned().collect()
}
