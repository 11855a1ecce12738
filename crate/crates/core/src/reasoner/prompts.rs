use super::Stage;

pub const SYSTEM: &str = include_str!("../../assets/prompts/system.txt");
const CONTEXT: &str = include_str!("../../assets/prompts/context.txt");
const IDENTIFY_REASONING: &str = include_str!("../../assets/prompts/identify_reasoning.txt");
const IDENTIFY_ANSWER: &str = include_str!("../../assets/prompts/identify_answer.txt");
const TASK_REASONING: &str = include_str!("../../assets/prompts/task_reasoning.txt");
const TASK_SCORES: &str = include_str!("../../assets/prompts/task_scores.txt");
const GRIPPER: &str = include_str!("../../assets/prompts/gripper.txt");
const RETRY: &str = include_str!("../../assets/prompts/retry.txt");

/// Bumped whenever template wording changes.
pub const TEMPLATE_VERSION: u32 = 1;

/// First line of each stage's prompt.
pub fn title(stage: Stage) -> &'static str {
    template(stage).lines().next().unwrap_or_default()
}

fn template(stage: Stage) -> &'static str {
    match stage {
        Stage::IdentifyReasoning => IDENTIFY_REASONING,
        Stage::IdentifyAnswer => IDENTIFY_ANSWER,
        Stage::TaskReasoning => TASK_REASONING,
        Stage::TaskScores => TASK_SCORES,
    }
}

pub struct PromptVars<'a> {
    /// "the hammer" or "an object".
    pub object: &'a str,
    pub task: &'a str,
    pub graph: &'a str,
    pub max_gripper_width: Option<f64>,
}

fn fill(t: &str, v: &PromptVars) -> String {
    let width = v.max_gripper_width.map(|w| format!("{w:.1}")).unwrap_or_default();
    t.replace("{object}", v.object)
        .replace("{task}", v.task)
        .replace("{max_gripper_width}", &width)
        .replace("{graph}", v.graph)
}

/// The object and graph are stated once, in whichever prompt opens the
/// conversation.
pub fn render(stage: Stage, first: bool, v: &PromptVars) -> String {
    let context = if first { fill(CONTEXT, v) } else { String::new() };
    let gripper = if v.max_gripper_width.is_some() { fill(GRIPPER, v) } else { String::new() };
    let body = template(stage)
        .replace("{context}\n", &context)
        .replace("{gripper}", &gripper);
    fill(&body, v).trim_end().to_string()
}

pub fn retry(error: &str) -> String {
    RETRY.replace("{error}", error).trim_end().to_string()
}
