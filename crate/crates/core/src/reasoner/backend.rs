use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// A chat model. Implementations are shared across threads when several
/// scenes are processed concurrently.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> String;
    fn complete(&self, messages: &[Message], temperature: f64) -> Result<String>;
}

/// Replays canned responses in order; errors once the script runs out.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<String>>,
    seen: Mutex<Vec<Vec<Message>>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    /// Every conversation passed to `complete`, in call order.
    pub fn requests(&self) -> Vec<Vec<Message>> {
        self.seen.lock().expect("scripted backend lock").clone()
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, messages: &[Message], _temperature: f64) -> Result<String> {
        self.seen.lock().expect("scripted backend lock").push(messages.to_vec());
        self.replies
            .lock()
            .expect("scripted backend lock")
            .pop_front()
            .ok_or_else(|| Error::BackendUnavailable("scripted backend has no replies left".into()))
    }
}

pub const ENV_API_BASE: &str = "SHAPEGRASP_API_BASE";
pub const ENV_API_KEY: &str = "SHAPEGRASP_API_KEY";
pub const ENV_MODEL: &str = "SHAPEGRASP_MODEL";

/// OpenAI-compatible `chat/completions` client.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    base: String,
    key: Option<String>,
    model: String,
    #[cfg(feature = "http")]
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(base: impl Into<String>, key: Option<String>, model: impl Into<String>) -> Self {
        HttpBackend {
            base: base.into().trim_end_matches('/').to_string(),
            key,
            model: model.into(),
            #[cfg(feature = "http")]
            agent: ureq::Agent::config_builder()
                .timeout_global(Some(std::time::Duration::from_secs(120)))
                .build()
                .into(),
        }
    }

    /// Reads the endpoint from the environment. `model` overrides the
    /// model variable when given.
    pub fn from_env(model: Option<&str>) -> Result<Self> {
        let base = std::env::var(ENV_API_BASE)
            .map_err(|_| Error::BackendUnavailable(format!("{ENV_API_BASE} is not set")))?;
        let key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        let model = match model {
            Some(m) => m.to_string(),
            None => std::env::var(ENV_MODEL)
                .map_err(|_| Error::BackendUnavailable(format!("{ENV_MODEL} is not set")))?,
        };
        Ok(HttpBackend::new(base, key, model))
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn request_body(&self, messages: &[Message], temperature: f64) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
        })
    }
}

/// Pulls `choices[0].message.content` out of a completion response.
pub fn completion_content(body: &serde_json::Value) -> Result<String> {
    body.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| {
            Error::BackendUnavailable("response has no choices[0].message.content".into())
        })
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> String {
        format!("http:{}", self.model)
    }

    #[cfg(feature = "http")]
    fn complete(&self, messages: &[Message], temperature: f64) -> Result<String> {
        let url = format!("{}/chat/completions", self.base);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let unavailable = |e: ureq::Error| Error::BackendUnavailable(format!("{url}: {e}"));
        let mut resp = req
            .send_json(self.request_body(messages, temperature))
            .map_err(unavailable)?;
        let body: serde_json::Value = resp.body_mut().read_json().map_err(unavailable)?;
        completion_content(&body)
    }

    #[cfg(not(feature = "http"))]
    fn complete(&self, _messages: &[Message], _temperature: f64) -> Result<String> {
        Err(Error::BackendUnavailable("built without the http feature".into()))
    }
}
