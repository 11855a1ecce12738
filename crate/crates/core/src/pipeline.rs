//! End-to-end run: decomposition, selection, graph, reasoning and grasp.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::decomp2d::Planar;
use crate::decomp3d::Volumetric;
use crate::error::{Error, Result};
use crate::grasp::{compute_grasp, GraspPose};
use crate::graph::{build_graph, serialize_graph, ObjectGraph};
use crate::parts::{Decomposition, Source};
use crate::reasoner::{run_chain, select_part, ChatBackend, ReasonerConfig, ReasonerTranscript};
use crate::scene::{back_project, depth_confidence_fraction, SceneInput, ScenePaths, HIGH_CONFIDENCE_CUTOFF};
use crate::selector::{decide, select, threshold_search, Reason, SelectionResult, SelectorConfig};
use crate::shape_fit::{fit_primitive, node_attributes, NodeAttributes, DEFAULT_EPSILON_PCT};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Auto,
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Mode::Auto),
            "2d" => Ok(Mode::TwoD),
            "3d" => Ok(Mode::ThreeD),
            _ => Err(Error::InvalidInput(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub selector: SelectorConfig,
    pub epsilon_pct: f64,
    /// Voxel edge in metres; derived from the cloud extent when absent.
    pub voxel_size_m: Option<f64>,
    /// Fail instead of emitting a pose without depth.
    pub strict_depth: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Auto,
            selector: SelectorConfig::default(),
            epsilon_pct: DEFAULT_EPSILON_PCT,
            voxel_size_m: None,
            strict_depth: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.selector.validate()?;
        if !(self.epsilon_pct > 0.0 && self.epsilon_pct < 50.0) {
            return Err(Error::InvalidInput(format!("epsilon_pct {} out of range", self.epsilon_pct)));
        }
        if let Some(v) = self.voxel_size_m {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("voxel size {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Milliseconds per named stage.
pub type Timings = BTreeMap<String, f64>;

fn timed<T>(timings: &mut Timings, name: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *timings.entry(name.to_string()).or_default() += t.elapsed().as_secs_f64() * 1e3;
    out
}

#[derive(Debug, Clone)]
pub struct DecomposeOutcome {
    pub scene: SceneInput,
    pub selection: SelectionResult,
    pub warnings: Vec<String>,
}

/// Both decompositions as the mode requires, and the choice between them.
/// The mask is reduced to its largest connected component first.
pub fn decompose_scene(
    scene: &SceneInput,
    config: &PipelineConfig,
    timings: &mut Timings,
) -> Result<DecomposeOutcome> {
    config.validate()?;
    let scene = scene.with_object_mask();
    let sel = &config.selector;
    let conf = depth_confidence_fraction(&scene, HIGH_CONFIDENCE_CUTOFF);
    let mut warnings = Vec::new();

    let run_2d = |timings: &mut Timings| -> Result<Decomposition> {
        let planar = timed(timings, "decompose_2d", || Planar::new(&scene.mask))?;
        Ok(timed(timings, "decompose_2d", || {
            threshold_search(|g| planar.decompose(g), sel.gamma_init_2d, sel)
        }))
    };
    let run_3d = |timings: &mut Timings| -> Result<Decomposition> {
        let cloud = back_project(&scene, HIGH_CONFIDENCE_CUTOFF)?;
        let vol = timed(timings, "decompose_3d", || Volumetric::new(cloud, &scene.mask, config.voxel_size_m))?;
        Ok(timed(timings, "decompose_3d", || {
            threshold_search(|g| vol.decompose(g), sel.gamma_init_3d, sel)
        }))
    };
    let forced_2d = |chosen| SelectionResult {
        chosen,
        rejected: None,
        reason: Reason::Forced2D,
        conf_fraction: conf,
    };

    let selection = match (config.mode, scene.depth.is_some()) {
        (Mode::TwoD, _) => forced_2d(run_2d(timings)?),
        (Mode::Auto, false) => {
            warnings.push("no depth supplied; using the 2D decomposition".into());
            forced_2d(run_2d(timings)?)
        }
        (Mode::ThreeD, false) => {
            return Err(Error::InvalidInput("3d mode needs depth input".into()));
        }
        (Mode::ThreeD, true) => {
            let c3d = run_3d(timings)?;
            let auto = decide(c3d.len(), conf, sel);
            if auto != Reason::Preferred3D {
                warnings.push(format!(
                    "auto mode would reject the 3D decomposition ({auto:?}: {} parts, confident depth {:.2})",
                    c3d.len(),
                    conf
                ));
            }
            SelectionResult {
                chosen: c3d,
                rejected: None,
                reason: Reason::Forced3D,
                conf_fraction: conf,
            }
        }
        (Mode::Auto, true) => {
            let c2d = run_2d(timings)?;
            match run_3d(timings) {
                Ok(c3d) => timed(timings, "select", || select(c2d, c3d, conf, sel)),
                Err(e @ (Error::DegeneratePointCloud(_) | Error::DegenerateGeometry(_))) => {
                    warnings.push(format!("3D decomposition unavailable ({e}); using 2D"));
                    SelectionResult { reason: Reason::LowDepthConfidence, ..forced_2d(c2d) }
                }
                Err(e) => return Err(e),
            }
        }
    };
    if selection.chosen.degenerate {
        warnings.push("decomposition stayed a single part down to the threshold floor".into());
    }
    Ok(DecomposeOutcome { scene, selection, warnings })
}

/// Per-part primitives and attributes, in decomposition order.
pub fn describe_parts(
    scene: &SceneInput,
    decomp: &Decomposition,
    epsilon_pct: f64,
) -> Result<Vec<NodeAttributes>> {
    let total = decomp.total_pixels();
    decomp
        .parts
        .iter()
        .map(|part| {
            let prim = fit_primitive(&part.polygon, epsilon_pct)?;
            Ok(node_attributes(part, prim, &scene.rgb, total))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<ScenePaths>,
    pub object: String,
    pub task: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub source: Source,
    pub part_count: usize,
    pub gamma_used: f64,
    pub iterations: u32,
    pub degenerate: bool,
}

impl From<&Decomposition> for DecompositionSummary {
    fn from(d: &Decomposition) -> Self {
        DecompositionSummary {
            source: d.source,
            part_count: d.len(),
            gamma_used: d.gamma_used,
            iterations: d.iterations,
            degenerate: d.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub chosen: DecompositionSummary,
    pub rejected: Option<DecompositionSummary>,
    pub reason: Reason,
    pub conf_fraction: f64,
}

impl From<&SelectionResult> for SelectionSummary {
    fn from(s: &SelectionResult) -> Self {
        SelectionSummary {
            chosen: (&s.chosen).into(),
            rejected: s.rejected.as_ref().map(Into::into),
            reason: s.reason,
            conf_fraction: s.conf_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub version: String,
    pub inputs: InputsEcho,
    pub selection: SelectionSummary,
    /// Canonical graph JSON, embedded verbatim.
    pub graph: Box<RawValue>,
    pub transcript: ReasonerTranscript,
    pub selected_node: usize,
    pub selected_label: Option<String>,
    pub grasp: GraspPose,
    pub degenerate: bool,
    pub warnings: Vec<String>,
    pub timings_ms: Timings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// The report with timings cleared; identical inputs give identical
    /// bytes.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.timings_ms.clear();
        r.to_json()
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report: {e}")))
    }
}

/// Everything a run produced, including the in-memory graph and parts.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub graph: ObjectGraph,
    pub decomposition: Decomposition,
    pub scene: SceneInput,
}

impl RunOutcome {
    /// Pixels of the selected part.
    pub fn selected_pixels(&self) -> &[crate::raster::Pixel] {
        &self.decomposition.parts[self.graph.part_index[self.report.selected_node]].pixels
    }
}

pub struct RunRequest<'a> {
    pub scene: &'a SceneInput,
    pub paths: Option<ScenePaths>,
    pub object: &'a str,
    pub task: &'a str,
    pub pipeline: &'a PipelineConfig,
    pub reasoner: &'a ReasonerConfig,
}

pub fn run(req: &RunRequest, backend: &dyn ChatBackend) -> Result<RunOutcome> {
    req.reasoner.validate()?;
    let mut timings = Timings::new();
    let start = Instant::now();
    let DecomposeOutcome { scene, selection, warnings } = decompose_scene(req.scene, req.pipeline, &mut timings)?;
    let attrs = timed(&mut timings, "shape_fit", || {
        describe_parts(&scene, &selection.chosen, req.pipeline.epsilon_pct)
    })?;
    let name = req.reasoner.include_object_name.then_some(req.object);
    let graph = timed(&mut timings, "graph", || {
        build_graph(
            &selection.chosen,
            attrs,
            name,
            &req.reasoner.extra_object_attrs,
            (scene.width, scene.height),
        )
    });
    let transcript = timed(&mut timings, "reasoner", || run_chain(backend, &graph, req.task, req.reasoner))?;
    let node = select_part(&transcript.scores, &graph)?;
    let pixels = &selection.chosen.parts[graph.part_index[node]].pixels;
    let grasp = timed(&mut timings, "grasp", || compute_grasp(&scene, pixels, node, req.pipeline.strict_depth))?;
    timings.insert("total".into(), start.elapsed().as_secs_f64() * 1e3);

    let graph_json = RawValue::from_string(serialize_graph(&graph)).expect("canonical graph is JSON");
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        version: VERSION.into(),
        inputs: InputsEcho { paths: req.paths.clone(), object: req.object.into(), task: req.task.into() },
        selection: (&selection).into(),
        graph: graph_json,
        selected_label: transcript.labels.as_ref().and_then(|l| l.labels.get(&node).cloned()),
        transcript,
        selected_node: node,
        grasp,
        degenerate: selection.chosen.degenerate,
        warnings,
        timings_ms: timings,
    };
    Ok(RunOutcome { report, graph, decomposition: selection.chosen, scene })
}
