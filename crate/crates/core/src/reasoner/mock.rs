//! Deterministic rule-driven stand-in for a chat model.
//!
//! A rulebook lists objects, how to recognise each of their parts from node
//! attributes, and per-task scores keyed by part label. The mock reads the
//! conversation it is given: the context block for the object and graph, the
//! latest stage title to decide what to answer, and its own earlier label
//! answer to score by label.
//!
//! ```json
//! {
//!   "naive_strategy": "largest",
//!   "objects": [{
//!     "object": "hammer",
//!     "parts": [{"label": "head", "match": {"color": "gray"}},
//!               {"label": "handle", "match": {"color": "olive"}}],
//!     "tasks": [{"task": "hand it over", "scores": {"head": 0.9, "handle": 0.2},
//!                "unlabeled": "least_elongated"}]
//!   }]
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backend::{ChatBackend, Message, Role};
use super::{prompts, Stage};
use crate::error::{Error, Result};

/// Node ranking used when the mock has no part labels to score by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Largest,
    Smallest,
    MostElongated,
    LeastElongated,
    Narrowest,
    Widest,
}

impl Strategy {
    fn describe(self) -> &'static str {
        match self {
            Strategy::Largest => "largest",
            Strategy::Smallest => "smallest",
            Strategy::MostElongated => "most elongated",
            Strategy::LeastElongated => "least elongated",
            Strategy::Narrowest => "narrowest",
            Strategy::Widest => "widest",
        }
    }

    /// Larger key is better.
    fn key(self, n: &Node) -> f64 {
        match self {
            Strategy::Largest => n.area_pct,
            Strategy::Smallest => -n.area_pct,
            Strategy::MostElongated => n.aspect_ratio,
            Strategy::LeastElongated => -n.aspect_ratio,
            Strategy::Narrowest => -n.width_px,
            Strategy::Widest => n.width_px,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matcher {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_area_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_area_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_aspect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_aspect: Option<f64>,
}

impl Matcher {
    fn matches(&self, n: &Node) -> bool {
        self.color.as_deref().is_none_or(|c| c.eq_ignore_ascii_case(&n.color))
            && self.shape.as_deref().is_none_or(|s| s.eq_ignore_ascii_case(&n.shape))
            && self.min_area_pct.is_none_or(|v| n.area_pct >= v)
            && self.max_area_pct.is_none_or(|v| n.area_pct <= v)
            && self.min_aspect.is_none_or(|v| n.aspect_ratio >= v)
            && self.max_aspect.is_none_or(|v| n.aspect_ratio <= v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartRule {
    pub label: String,
    #[serde(rename = "match")]
    pub matcher: Matcher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRule {
    pub task: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Score per part label.
    pub scores: BTreeMap<String, f64>,
    /// Attribute name to label scores, applied when any node carries the
    /// attribute with a value other than "false".
    #[serde(default)]
    pub when_attr: BTreeMap<String, BTreeMap<String, f64>>,
    /// Ranking used after task reasoning when labels are unavailable.
    #[serde(default)]
    pub unlabeled: Option<Strategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRule {
    pub object: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub parts: Vec<PartRule>,
    #[serde(default)]
    pub tasks: Vec<TaskRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rulebook {
    #[serde(default = "default_naive")]
    pub naive_strategy: Strategy,
    #[serde(default = "default_score")]
    pub default_score: f64,
    pub objects: Vec<ObjectRule>,
}

fn default_naive() -> Strategy {
    Strategy::Largest
}

fn default_score() -> f64 {
    0.1
}

const SHIPPED: &str = include_str!("../../assets/rulebook.json");

/// Score given to nodes too wide for the gripper.
pub const TOO_WIDE_SCORE: f64 = 0.05;

impl Rulebook {
    pub fn shipped() -> Rulebook {
        serde_json::from_str(SHIPPED).expect("shipped rulebook parses")
    }

    pub fn from_json(text: &str) -> Result<Rulebook> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("rulebook: {e}")))
    }

    pub fn load(path: &Path) -> Result<Rulebook> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    fn object_by_name(&self, name: &str) -> Option<&ObjectRule> {
        let name = name.trim();
        self.objects.iter().find(|o| {
            o.object.eq_ignore_ascii_case(name) || o.aliases.iter().any(|a| a.eq_ignore_ascii_case(name))
        })
    }

    /// First object whose part rules cover every node and each match some
    /// node.
    fn object_by_signature(&self, nodes: &[Node]) -> Option<&ObjectRule> {
        self.objects.iter().find(|o| {
            nodes.iter().all(|n| o.parts.iter().any(|p| p.matcher.matches(n)))
                && o.parts.iter().all(|p| nodes.iter().any(|n| p.matcher.matches(n)))
        })
    }
}

impl ObjectRule {
    fn task(&self, task: &str) -> Option<&TaskRule> {
        let task = task.trim();
        self.tasks.iter().find(|t| {
            t.task.eq_ignore_ascii_case(task) || t.aliases.iter().any(|a| a.eq_ignore_ascii_case(task))
        })
    }

    fn label(&self, n: &Node) -> Option<&str> {
        self.parts.iter().find(|p| p.matcher.matches(n)).map(|p| p.label.as_str())
    }
}

#[derive(Debug, Clone, Deserialize)]
struct Node {
    id: usize,
    shape: String,
    area_pct: f64,
    aspect_ratio: f64,
    color: String,
    width_px: f64,
    #[serde(default)]
    extra: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct Graph {
    nodes: Vec<Node>,
}

/// What the mock gathers from the conversation.
struct Context {
    object: Option<String>,
    task: Option<String>,
    nodes: Vec<Node>,
    gripper: Option<f64>,
    stage: Stage,
    labels: Option<BTreeMap<usize, String>>,
    task_reasoned: bool,
}

fn line_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)).map(str::trim)
}

fn read_context(messages: &[Message]) -> Result<Context> {
    let mut object = None;
    let mut task = None;
    let mut nodes = None;
    let mut gripper = None;
    let mut stage = None;
    let mut labels = None;
    let mut task_reasoned = false;
    let mut last_stage = None;
    for m in messages {
        match m.role {
            Role::User => {
                let c = &m.content;
                if let Some(o) = line_value(c, "Object: ") {
                    object = Some(o.strip_prefix("the ").unwrap_or(o).to_string());
                }
                if let Some(t) = line_value(c, "Task: ") {
                    task = Some(t.to_string());
                }
                if let Some(g) = line_value(c, "Graph: ") {
                    let g: Graph = serde_json::from_str(g).map_err(|e| {
                        Error::InvalidInput(format!("mock cannot read the graph: {e}"))
                    })?;
                    nodes = Some(g.nodes);
                }
                if let Some(w) = line_value(c, "Max gripper width: ") {
                    gripper = w.split_whitespace().next().and_then(|v| v.parse().ok());
                }
                let first = c.lines().next().unwrap_or_default();
                if let Some(&s) = Stage::ALL.iter().find(|&&s| prompts::title(s) == first) {
                    stage = Some(s);
                    task_reasoned |= s == Stage::TaskReasoning;
                    last_stage = Some(s);
                }
            }
            Role::Assistant if last_stage == Some(Stage::IdentifyAnswer) => {
                if let Ok(obj) = super::schema::extract_object(&m.content) {
                    labels = Some(
                        obj.into_iter()
                            .filter_map(|(k, v)| Some((k.parse().ok()?, v.as_str()?.to_string())))
                            .collect(),
                    );
                }
            }
            _ => {}
        }
    }
    let nodes = nodes.ok_or_else(|| Error::InvalidInput("mock saw no graph".into()))?;
    let stage = stage.ok_or_else(|| Error::InvalidInput("mock saw no stage prompt".into()))?;
    Ok(Context {
        object: object.filter(|o| o != "an object"),
        task,
        nodes,
        gripper,
        stage,
        labels,
        task_reasoned,
    })
}

pub struct MockBackend {
    rulebook: Rulebook,
    strict: bool,
}

impl MockBackend {
    pub fn new(rulebook: Rulebook) -> Self {
        MockBackend { rulebook, strict: false }
    }

    /// Unknown objects and tasks become errors instead of generic answers.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn rulebook(&self) -> &Rulebook {
        &self.rulebook
    }

    fn object<'a>(&'a self, ctx: &Context) -> Result<Option<&'a ObjectRule>> {
        let found = ctx
            .object
            .as_deref()
            .and_then(|n| self.rulebook.object_by_name(n))
            .or_else(|| self.rulebook.object_by_signature(&ctx.nodes));
        if found.is_none() && self.strict {
            return Err(Error::RulebookMissingEntry(format!(
                "object {:?}",
                ctx.object.as_deref().unwrap_or("(unnamed)")
            )));
        }
        Ok(found)
    }

    fn task<'a>(&self, ctx: &Context, obj: Option<&'a ObjectRule>) -> Result<Option<&'a TaskRule>> {
        let task = ctx.task.as_deref().unwrap_or_default();
        let found = obj.and_then(|o| o.task(task));
        if found.is_none() && self.strict {
            return Err(Error::RulebookMissingEntry(format!(
                "task {task:?} for object {:?}",
                obj.map(|o| o.object.as_str()).unwrap_or("(unknown)")
            )));
        }
        Ok(found)
    }

    fn labels(&self, ctx: &Context, obj: Option<&ObjectRule>) -> BTreeMap<usize, String> {
        ctx.nodes
            .iter()
            .map(|n| {
                let label = obj
                    .and_then(|o| o.label(n))
                    .map_or_else(|| format!("part_{}", n.id), str::to_string);
                (n.id, label)
            })
            .collect()
    }

    fn too_wide(&self, ctx: &Context, n: &Node) -> bool {
        ctx.gripper.is_some_and(|w| n.width_px > w)
    }

    /// 0.9 for the best-ranked node the gripper can hold, 0.2 for the rest.
    fn rank(&self, ctx: &Context, strategy: Strategy) -> BTreeMap<usize, f64> {
        let best = ctx
            .nodes
            .iter()
            .filter(|n| !self.too_wide(ctx, n))
            .max_by(|a, b| strategy.key(a).total_cmp(&strategy.key(b)).then(b.id.cmp(&a.id)))
            .map(|n| n.id);
        ctx.nodes
            .iter()
            .map(|n| (n.id, if Some(n.id) == best { 0.9 } else { 0.2 }))
            .collect()
    }

    fn scores(&self, ctx: &Context) -> Result<BTreeMap<usize, f64>> {
        let obj = self.object(ctx)?;
        let task = self.task(ctx, obj)?;
        let mut scores = match (&ctx.labels, task) {
            (Some(labels), Some(rule)) => {
                let active: Vec<&BTreeMap<String, f64>> = rule
                    .when_attr
                    .iter()
                    .filter(|(attr, _)| {
                        ctx.nodes.iter().any(|n| {
                            n.extra.get(*attr).is_some_and(|v| !v.eq_ignore_ascii_case("false"))
                        })
                    })
                    .map(|(_, s)| s)
                    .collect();
                ctx.nodes
                    .iter()
                    .map(|n| {
                        let label = labels.get(&n.id).map(|l| l.to_lowercase()).unwrap_or_default();
                        let s = active
                            .iter()
                            .find_map(|m| m.get(&label))
                            .or_else(|| rule.scores.get(&label))
                            .copied()
                            .unwrap_or(self.rulebook.default_score);
                        (n.id, s)
                    })
                    .collect()
            }
            (None, Some(rule)) if ctx.task_reasoned => {
                self.rank(ctx, rule.unlabeled.unwrap_or(self.rulebook.naive_strategy))
            }
            _ => self.rank(ctx, self.rulebook.naive_strategy),
        };
        for n in &ctx.nodes {
            if self.too_wide(ctx, n) {
                let s = scores.entry(n.id).or_default();
                *s = s.min(TOO_WIDE_SCORE);
            }
        }
        Ok(scores)
    }

    fn respond(&self, ctx: &Context) -> Result<String> {
        let describe = |n: &Node| {
            format!(
                "a {} {} covering {:.1}% of the object (aspect ratio {:.1})",
                n.color, n.shape, n.area_pct, n.aspect_ratio
            )
        };
        match ctx.stage {
            Stage::IdentifyReasoning => {
                let obj = self.object(ctx)?;
                let labels = self.labels(ctx, obj);
                let mut s = String::new();
                for n in &ctx.nodes {
                    s.push_str(&format!(
                        "Node {} is {}; it is most likely the {}.\n",
                        n.id,
                        describe(n),
                        labels[&n.id]
                    ));
                }
                Ok(s.trim_end().to_string())
            }
            Stage::IdentifyAnswer => {
                let obj = self.object(ctx)?;
                Ok(serde_json::to_string(&keyed(self.labels(ctx, obj))).expect("labels serialise"))
            }
            Stage::TaskReasoning => {
                let scores = self.scores(ctx)?;
                let best = best_of(&scores);
                let task = ctx.task.as_deref().unwrap_or("the task");
                let what = match &ctx.labels {
                    Some(l) => format!("the {} (node {best})", l.get(&best).map_or("part", String::as_str)),
                    None => format!("node {best}"),
                };
                let mut s = format!("To {task}, the gripper should hold {what}.");
                if ctx.gripper.is_some() {
                    let wide: Vec<String> = ctx
                        .nodes
                        .iter()
                        .filter(|n| self.too_wide(ctx, n))
                        .map(|n| n.id.to_string())
                        .collect();
                    if !wide.is_empty() {
                        s.push_str(&format!(" Nodes {} are wider than the gripper opens.", wide.join(", ")));
                    }
                }
                if ctx.labels.is_none() {
                    if let Some(rule) = self.task(ctx, self.object(ctx)?)? {
                        let st = rule.unlabeled.unwrap_or(self.rulebook.naive_strategy);
                        s.push_str(&format!(" Without part names the {} node is preferred.", st.describe()));
                    }
                }
                Ok(s)
            }
            Stage::TaskScores => {
                Ok(serde_json::to_string(&keyed(self.scores(ctx)?)).expect("scores serialise"))
            }
        }
    }
}

fn keyed<T>(m: BTreeMap<usize, T>) -> serde_json::Map<String, serde_json::Value>
where
    T: Into<serde_json::Value>,
{
    m.into_iter().map(|(k, v)| (k.to_string(), v.into())).collect()
}

fn best_of(scores: &BTreeMap<usize, f64>) -> usize {
    scores
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&k, _)| k)
        .unwrap_or(0)
}

impl ChatBackend for MockBackend {
    fn name(&self) -> String {
        "mock".into()
    }

    fn complete(&self, messages: &[Message], _temperature: f64) -> Result<String> {
        let ctx = read_context(messages)?;
        self.respond(&ctx)
    }
}
