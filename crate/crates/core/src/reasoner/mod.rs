//! The four-prompt reasoning chain over an object graph.

mod backend;
pub mod mock;
pub mod prompts;
pub mod schema;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use backend::{
    completion_content, ChatBackend, HttpBackend, Message, Role, ScriptedBackend, ENV_API_BASE,
    ENV_API_KEY, ENV_MODEL,
};
pub use mock::{MockBackend, Rulebook};

use crate::error::{Error, Result};
use crate::graph::{serialize_graph, ObjectGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    IdentifyReasoning,
    IdentifyAnswer,
    TaskReasoning,
    TaskScores,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::IdentifyReasoning,
        Stage::IdentifyAnswer,
        Stage::TaskReasoning,
        Stage::TaskScores,
    ];

    pub fn is_structured(self) -> bool {
        matches!(self, Stage::IdentifyAnswer | Stage::TaskScores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageSet {
    #[default]
    Full,
    NoIdent,
    NoTask,
    ScoresOnly,
}

impl StageSet {
    pub fn stages(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            StageSet::Full => &[IdentifyReasoning, IdentifyAnswer, TaskReasoning, TaskScores],
            StageSet::NoIdent => &[TaskReasoning, TaskScores],
            StageSet::NoTask => &[IdentifyReasoning, IdentifyAnswer, TaskScores],
            StageSet::ScoresOnly => &[TaskScores],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StageSet::Full => "full",
            StageSet::NoIdent => "no-ident",
            StageSet::NoTask => "no-task",
            StageSet::ScoresOnly => "scores-only",
        }
    }
}

impl FromStr for StageSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(StageSet::Full),
            "no-ident" | "skip_identification" => Ok(StageSet::NoIdent),
            "no-task" | "skip_task_reasoning" => Ok(StageSet::NoTask),
            "scores-only" | "scores_only" => Ok(StageSet::ScoresOnly),
            _ => Err(Error::InvalidInput(format!("unknown stage set {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            _ => Err(Error::InvalidInput(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReasonerConfig {
    pub backend: BackendKind,
    pub model_id: String,
    pub stages: StageSet,
    pub include_object_name: bool,
    pub max_gripper_width_px: Option<f64>,
    /// Copied into every node's `extra` map when the graph is built.
    pub extra_object_attrs: BTreeMap<String, String>,
    pub max_retries: u32,
    pub temperature: f64,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        ReasonerConfig {
            backend: BackendKind::Mock,
            model_id: "mock".into(),
            stages: StageSet::Full,
            include_object_name: true,
            max_gripper_width_px: None,
            extra_object_attrs: BTreeMap::new(),
            max_retries: 3,
            temperature: 0.0,
        }
    }
}

impl ReasonerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_retries < 1 {
            return Err(Error::InvalidInput("max_retries must be at least 1".into()));
        }
        if let Some(w) = self.max_gripper_width_px {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidInput(format!("max gripper width {w} must be positive")));
            }
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::InvalidInput("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedReply {
    pub response: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub stage: Stage,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<RejectedReply>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticAssignment {
    pub labels: BTreeMap<usize, String>,
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub scores: BTreeMap<usize, f64>,
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonerTranscript {
    pub backend: String,
    pub stages: StageSet,
    pub system_prompt: String,
    pub exchanges: Vec<Exchange>,
    pub labels: Option<SemanticAssignment>,
    pub scores: TaskScores,
    pub retry_count: u32,
}

/// Runs the configured stages as one conversation. The graph's object name
/// is withheld when `include_object_name` is off.
pub fn run_chain(
    backend: &dyn ChatBackend,
    graph: &ObjectGraph,
    task: &str,
    config: &ReasonerConfig,
) -> Result<ReasonerTranscript> {
    config.validate()?;
    let task = task.trim();
    if task.is_empty() {
        return Err(Error::InvalidInput("task must not be empty".into()));
    }
    if graph.is_empty() {
        return Err(Error::InvalidInput("graph has no nodes".into()));
    }
    let name = graph
        .object_name
        .as_deref()
        .filter(|n| config.include_object_name && !n.trim().is_empty());
    let graph_json = if name.is_some() || graph.object_name.is_none() {
        serialize_graph(graph)
    } else {
        serialize_graph(&ObjectGraph { object_name: None, ..graph.clone() })
    };
    let object = name.map_or_else(|| "an object".to_string(), |n| format!("the {}", n.trim()));
    let vars = prompts::PromptVars {
        object: &object,
        task,
        graph: &graph_json,
        max_gripper_width: config.max_gripper_width_px,
    };
    let n = graph.len();

    let mut messages = vec![Message::system(prompts::SYSTEM.trim_end())];
    let mut exchanges = Vec::new();
    let mut retry_count = 0;
    let mut labels = None;
    let mut scores = None;
    let mut reasoning: BTreeMap<Stage, String> = BTreeMap::new();

    for (i, &stage) in config.stages.stages().iter().enumerate() {
        let prompt = prompts::render(stage, i == 0, &vars);
        messages.push(Message::user(prompt.clone()));
        let mut rejected = Vec::new();
        let response = loop {
            let reply = backend.complete(&messages, config.temperature)?;
            let outcome = match stage {
                Stage::IdentifyAnswer => schema::parse_labels(&reply, n).map(|l| labels = Some(l)),
                Stage::TaskScores => schema::parse_scores(&reply, n).map(|s| scores = Some(s)),
                _ => Ok(()),
            };
            match outcome {
                Ok(()) => break reply,
                Err(invalid) => {
                    let attempts = rejected.len() as u32 + 1;
                    if attempts > config.max_retries {
                        return Err(if invalid.only_missing() {
                            Error::MissingNodeInResponse { missing: invalid.missing }
                        } else {
                            Error::SchemaViolation { attempts, message: invalid.message }
                        });
                    }
                    retry_count += 1;
                    messages.push(Message::assistant(reply.clone()));
                    messages.push(Message::user(prompts::retry(&invalid.message)));
                    rejected.push(RejectedReply { response: reply, error: invalid.message });
                }
            }
        };
        messages.push(Message::assistant(response.clone()));
        if !stage.is_structured() {
            reasoning.insert(stage, response.clone());
        }
        exchanges.push(Exchange { stage, prompt, response, rejected });
    }

    Ok(ReasonerTranscript {
        backend: backend.name(),
        stages: config.stages,
        system_prompt: prompts::SYSTEM.trim_end().to_string(),
        exchanges,
        labels: labels.map(|labels| SemanticAssignment {
            labels,
            rationale: reasoning.get(&Stage::IdentifyReasoning).cloned(),
        }),
        scores: TaskScores {
            scores: scores.expect("every stage set ends with the scoring prompt"),
            rationale: reasoning.get(&Stage::TaskReasoning).cloned(),
        },
        retry_count,
    })
}

/// Highest score; ties go to the larger area, then the lower id.
pub fn select_part(scores: &TaskScores, graph: &ObjectGraph) -> Result<usize> {
    let missing: Vec<usize> = (0..graph.len()).filter(|i| !scores.scores.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingNodeInResponse { missing });
    }
    let best = (0..graph.len())
        .max_by(|&a, &b| {
            scores.scores[&a]
                .total_cmp(&scores.scores[&b])
                .then(graph.nodes[a].area_pct.total_cmp(&graph.nodes[b].area_pct))
                .then(b.cmp(&a))
        })
        .ok_or_else(|| Error::InvalidInput("graph has no nodes".into()))?;
    Ok(best)
}
