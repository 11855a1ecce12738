//! Suite evaluation and threshold sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp2d::Planar;
use crate::decomp3d::Volumetric;
use crate::error::{Error, Result};
use crate::geom::principal_axes_2d;
use crate::parts::Source;
use crate::pipeline::{run, PipelineConfig, RunOutcome, RunRequest};
use crate::reasoner::{ChatBackend, ReasonerConfig, StageSet};
use crate::scene::{back_project, HIGH_CONFIDENCE_CUTOFF};
use crate::selector::{gamma_sequence, Reason};
use crate::synth::{Generated, ObjectSpec, Suite, TaskCase};

/// Largest yaw error the grasp proxy accepts, degrees.
pub const YAW_TOLERANCE_DEG: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub object: String,
    pub task: String,
    pub source: Option<Source>,
    pub reason: Option<Reason>,
    pub part_count: usize,
    pub degenerate: bool,
    pub selected_node: Option<usize>,
    pub selected_label: Option<String>,
    /// Ground-truth part holding most of the selected node's pixels.
    pub selected_part: Option<String>,
    pub correct: bool,
    pub grasp_ok: bool,
    pub yaw_error_deg: Option<f64>,
    /// Correct labels over nodes, when the run produced labels.
    pub identification: Option<[usize; 2]>,
    /// Same, restricted to nodes on the task's target parts.
    pub identification_target: Option<[usize; 2]>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub parts_2d: usize,
    pub parts_3d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSweep {
    pub object: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub stages: StageSet,
    pub backend: String,
    pub records: Vec<CaseRecord>,
    pub part_selection: f64,
    pub grasp_proxy: f64,
    pub part_identification_global: Option<f64>,
    pub part_identification_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<ObjectSweep>,
    /// Part selection per stage set.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ablation: BTreeMap<String, f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn yaw_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

fn case_config(base: &ReasonerConfig, case: &TaskCase) -> ReasonerConfig {
    let mut cfg = base.clone();
    if case.max_gripper_width_px.is_some() {
        cfg.max_gripper_width_px = case.max_gripper_width_px;
    }
    cfg.extra_object_attrs.extend(case.attrs.clone());
    cfg
}

/// Scores one finished run against the generator's ground truth.
pub fn score_case(spec: &ObjectSpec, gen: &Generated, case: &TaskCase, out: &RunOutcome) -> CaseRecord {
    let r = &out.report;
    let targets: Vec<usize> = case.grasp.iter().filter_map(|l| gen.part_index(l)).collect();
    let selected = gen.majority_part(out.selected_pixels());
    let correct = selected.is_some_and(|p| targets.contains(&p));

    let [u, v] = r.grasp.pixel;
    let (row, col) = (v.round() as usize, u.round() as usize);
    let at = (row < gen.owner.height() && col < gen.owner.width())
        .then(|| *gen.owner.get(row, col))
        .flatten()
        .map(|p| p as usize);
    let yaw_error = at.filter(|p| targets.contains(p)).map(|p| {
        let pts: Vec<[f64; 2]> = gen.part_pixels(p).iter().map(|&(r, c)| [c as f64, r as f64]).collect();
        match principal_axes_2d(&pts) {
            Ok(axes) if !axes.ambiguous => yaw_gap(r.grasp.yaw_deg, axes.angle_deg()),
            _ => 0.0,
        }
    });
    let grasp_ok = correct && yaw_error.is_some_and(|e| e <= YAW_TOLERANCE_DEG);

    let ident = r.transcript.labels.as_ref().map(|labels| {
        let mut all = [0usize; 2];
        let mut target = [0usize; 2];
        for (node, label) in &labels.labels {
            let pixels = &out.decomposition.parts[out.graph.part_index[*node]].pixels;
            let Some(gt) = gen.majority_part(pixels) else { continue };
            let ok = spec.label_matches(gt, label) as usize;
            all[0] += ok;
            all[1] += 1;
            if targets.contains(&gt) {
                target[0] += ok;
                target[1] += 1;
            }
        }
        (all, target)
    });

    CaseRecord {
        object: spec.name.clone(),
        task: case.task.clone(),
        source: Some(r.selection.chosen.source),
        reason: Some(r.selection.reason),
        part_count: r.selection.chosen.part_count,
        degenerate: r.degenerate,
        selected_node: Some(r.selected_node),
        selected_label: r.selected_label.clone(),
        selected_part: selected.map(|p| gen.labels[p].clone()),
        correct,
        grasp_ok,
        yaw_error_deg: yaw_error,
        identification: ident.map(|(a, _)| a),
        identification_target: ident.map(|(_, t)| t),
        error: None,
    }
}

fn failed(spec: &ObjectSpec, case: &TaskCase, e: &Error) -> CaseRecord {
    CaseRecord {
        object: spec.name.clone(),
        task: case.task.clone(),
        source: None,
        reason: None,
        part_count: 0,
        degenerate: false,
        selected_node: None,
        selected_label: None,
        selected_part: None,
        correct: false,
        grasp_ok: false,
        yaw_error_deg: None,
        identification: None,
        identification_target: None,
        error: Some(format!("{}: {e}", e.kind())),
    }
}

/// Runs every object-task case; failures are recorded, not raised.
pub fn evaluate(
    suite: &Suite,
    pipeline: &PipelineConfig,
    reasoner: &ReasonerConfig,
    backend: &dyn ChatBackend,
) -> Result<EvalReport> {
    if suite.case_count() == 0 {
        return Err(Error::InvalidInput("suite has no cases".into()));
    }
    pipeline.validate()?;
    reasoner.validate()?;
    let generated: Vec<Result<Generated>> = suite.objects.par_iter().map(ObjectSpec::generate).collect();
    let jobs: Vec<(usize, &TaskCase)> = suite
        .objects
        .iter()
        .enumerate()
        .flat_map(|(i, o)| o.tasks.iter().map(move |t| (i, t)))
        .collect();
    let records: Vec<CaseRecord> = jobs
        .par_iter()
        .map(|&(i, case)| {
            let spec = &suite.objects[i];
            let gen = match &generated[i] {
                Ok(g) => g,
                Err(e) => return failed(spec, case, e),
            };
            let cfg = case_config(reasoner, case);
            let req = RunRequest {
                scene: &gen.scene,
                paths: None,
                object: &spec.name,
                task: &case.task,
                pipeline,
                reasoner: &cfg,
            };
            match run(&req, backend) {
                Ok(out) => score_case(spec, gen, case, &out),
                Err(e) => failed(spec, case, &e),
            }
        })
        .collect();

    let n = records.len();
    let sum = |f: fn(&CaseRecord) -> Option<[usize; 2]>| {
        let v: Vec<[usize; 2]> = records.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| {
            let (a, b) = v.iter().fold((0, 0), |(a, b), x| (a + x[0], b + x[1]));
            ratio(a, b)
        })
    };
    Ok(EvalReport {
        stages: reasoner.stages,
        backend: backend.name(),
        part_selection: ratio(records.iter().filter(|r| r.correct).count(), n),
        grasp_proxy: ratio(records.iter().filter(|r| r.grasp_ok).count(), n),
        part_identification_global: sum(|r| r.identification),
        part_identification_target: sum(|r| r.identification_target),
        records,
        sweeps: Vec::new(),
        ablation: BTreeMap::new(),
    })
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_gamma_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("gamma range {s:?} is not start:stop:step"));
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = v[..] else { return Err(bad()) };
    if !(start > 0.0 && stop >= start && step > 0.0 && stop < 1.0) {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect())
}

/// The default sweep grid: the search sequence from 0.35 down to the
/// floor, ascending.
pub fn default_sweep_grid() -> Vec<f64> {
    let mut g = gamma_sequence(0.35, 0.025, 0.01);
    g.reverse();
    g
}

/// Part counts at each threshold without the search; `gammas` must be
/// ascending.
pub fn sweep_thresholds(spec: &ObjectSpec, gammas: &[f64], voxel_size_m: Option<f64>) -> Result<Vec<SweepRow>> {
    if gammas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("sweep thresholds must be ascending".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(Error::InvalidInput(format!("threshold {g} outside (0, 1)")));
    }
    let gen = spec.generate()?;
    let scene = gen.scene.with_object_mask();
    let planar = Planar::new(&scene.mask)?;
    let vol = match back_project(&scene, HIGH_CONFIDENCE_CUTOFF) {
        Ok(cloud) => Some(Volumetric::new(cloud, &scene.mask, voxel_size_m)?),
        Err(_) => None,
    };
    // Sequential: the split trees are shared and filled lazily.
    Ok(gammas
        .iter()
        .map(|&g| SweepRow {
            gamma: g,
            parts_2d: planar.decompose(g).len(),
            parts_3d: vol.as_ref().map(|v| v.decompose(g).len()),
        })
        .collect())
}

pub fn sweep_suite(suite: &Suite, gammas: &[f64], voxel_size_m: Option<f64>) -> Result<Vec<ObjectSweep>> {
    suite
        .objects
        .iter()
        .map(|o| {
            Ok(ObjectSweep {
                object: o.name.clone(),
                rows: sweep_thresholds(o, gammas, voxel_size_m)?,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

/// Plain-text tables: per-case results, aggregates and any sweeps.
pub fn render_table(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "stages: {}   backend: {}", r.stages.as_str(), r.backend);
    let _ = writeln!(
        s,
        "{:<16} {:<24} {:>3} {:>5} {:>4}  {:<14} {:<14} {:>3} {:>5}",
        "object", "task", "src", "parts", "node", "label", "gt part", "ok", "grasp"
    );
    for c in &r.records {
        let _ = writeln!(
            s,
            "{:<16} {:<24} {:>3} {:>5} {:>4}  {:<14} {:<14} {:>3} {:>5}{}",
            c.object,
            c.task,
            c.source.map_or("-", Source::as_str),
            c.part_count,
            c.selected_node.map_or_else(|| "-".into(), |n| n.to_string()),
            c.selected_label.as_deref().unwrap_or("-"),
            c.selected_part.as_deref().unwrap_or("-"),
            if c.correct { "yes" } else { "no" },
            if c.grasp_ok { "yes" } else { "no" },
            c.error.as_ref().map_or_else(String::new, |e| format!("  error: {e}")),
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "part identification {} ({})   part selection {:.2}   grasp proxy {:.2}   cases {}",
        opt(r.part_identification_global),
        opt(r.part_identification_target),
        r.part_selection,
        r.grasp_proxy,
        r.records.len()
    );
    if !r.ablation.is_empty() {
        let _ = writeln!(s, "\nablation (part selection)");
        for (stages, rate) in &r.ablation {
            let _ = writeln!(s, "{stages:<12} {rate:.2}");
        }
    }
    for sw in &r.sweeps {
        let _ = writeln!(s, "\nthreshold sweep: {}", sw.object);
        let _ = writeln!(s, "{:>7} {:>6} {:>6}", "gamma", "2d", "3d");
        for row in &sw.rows {
            let _ = writeln!(
                s,
                "{:>7.3} {:>6} {:>6}",
                row.gamma,
                row.parts_2d,
                row.parts_3d.map_or_else(|| "-".into(), |n| n.to_string())
            );
        }
    }
    s
}

/// Part-selection rate per stage set, for the ablation table.
pub fn ablation(
    suite: &Suite,
    pipeline: &PipelineConfig,
    reasoner: &ReasonerConfig,
    backend: &dyn ChatBackend,
) -> Result<BTreeMap<String, f64>> {
    [StageSet::Full, StageSet::NoTask, StageSet::NoIdent, StageSet::ScoresOnly]
        .into_iter()
        .map(|st| {
            let cfg = ReasonerConfig { stages: st, ..reasoner.clone() };
            Ok((st.as_str().to_string(), evaluate(suite, pipeline, &cfg, backend)?.part_selection))
        })
        .collect()
}
