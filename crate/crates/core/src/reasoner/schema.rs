//! Validation of the structured replies.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub message: String,
    /// Node ids absent from an otherwise well-formed reply.
    pub missing: Vec<usize>,
}

impl Invalid {
    fn new(message: impl Into<String>) -> Self {
        Invalid { message: message.into(), missing: Vec::new() }
    }

    /// True when the only defect is absent node ids.
    pub fn only_missing(&self) -> bool {
        !self.missing.is_empty()
    }
}

/// The outermost `{...}` of the reply, tolerating code fences and prose
/// around it.
pub fn extract_object(text: &str) -> Result<Map<String, Value>, Invalid> {
    let (Some(start), Some(end)) = (text.find('{'), text.rfind('}')) else {
        return Err(Invalid::new("reply contains no JSON object"));
    };
    if end < start {
        return Err(Invalid::new("reply contains no JSON object"));
    }
    match serde_json::from_str::<Value>(&text[start..=end]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Invalid::new("reply is not a JSON object")),
        Err(e) => Err(Invalid::new(format!("reply is not valid JSON: {e}"))),
    }
}

fn keyed<T>(
    map: Map<String, Value>,
    n_nodes: usize,
    mut value: impl FnMut(&str, Value) -> Result<T, String>,
) -> Result<BTreeMap<usize, T>, Invalid> {
    let mut out = BTreeMap::new();
    let mut problems = Vec::new();
    for (k, v) in map {
        match k.trim().parse::<usize>() {
            Ok(id) if id < n_nodes => match value(&k, v) {
                Ok(t) => {
                    out.insert(id, t);
                }
                Err(e) => problems.push(e),
            },
            _ => problems.push(format!("unknown node id {k:?}")),
        }
    }
    let missing: Vec<usize> = (0..n_nodes).filter(|i| !out.contains_key(i)).collect();
    if !problems.is_empty() {
        let mut message = problems.join("; ");
        if !missing.is_empty() {
            message.push_str(&format!("; missing node ids {missing:?}"));
        }
        return Err(Invalid::new(message));
    }
    if !missing.is_empty() {
        return Err(Invalid {
            message: format!("missing node ids {missing:?}; every node id 0..{n_nodes} needs an entry"),
            missing,
        });
    }
    Ok(out)
}

pub fn parse_labels(text: &str, n_nodes: usize) -> Result<BTreeMap<usize, String>, Invalid> {
    keyed(extract_object(text)?, n_nodes, |k, v| match v {
        Value::String(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        _ => Err(format!("label for node {k} must be a non-empty string")),
    })
}

/// Scores must be finite numbers; they are clamped into [0, 1].
pub fn parse_scores(text: &str, n_nodes: usize) -> Result<BTreeMap<usize, f64>, Invalid> {
    keyed(extract_object(text)?, n_nodes, |k, v| {
        match v.as_f64().filter(|x| x.is_finite()) {
            Some(x) => Ok(x.clamp(0.0, 1.0)),
            None => Err(format!("score for node {k} must be a finite number")),
        }
    })
}
