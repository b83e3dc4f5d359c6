use std::time::Duration;

use serde_json::{json, Value};

use super::DecomposeError;

/// A hosted text-completion service: prompt in, completion out.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, DecomposeError>;
}

/// Posts `{"prompt": ...}` to an endpoint and reads the completion from a
/// `completion`, `text` or `content` field, or from the raw body when the
/// response is not JSON.
pub struct HttpCompletion {
    endpoint: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpCompletion {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpCompletion {
            endpoint: endpoint.into(),
            key,
            agent,
        }
    }
}

impl std::fmt::Debug for HttpCompletion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpCompletion")
            .field("endpoint", &self.endpoint)
            .field("key", &self.key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

pub(crate) fn completion_text(body: &str) -> String {
    match serde_json::from_str::<Value>(body) {
        Ok(Value::Object(map)) => ["completion", "text", "content"]
            .iter()
            .find_map(|k| map.get(*k).and_then(Value::as_str))
            .map_or_else(|| body.to_owned(), str::to_owned),
        Ok(Value::String(s)) => s,
        _ => body.to_owned(),
    }
}

impl CompletionClient for HttpCompletion {
    fn complete(&self, prompt: &str) -> Result<String, DecomposeError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let unavailable = |e: ureq::Error| DecomposeError::ServiceUnavailable(e.to_string());
        let mut resp = req.send_json(json!({ "prompt": prompt })).map_err(unavailable)?;
        let body = resp.body_mut().read_to_string().map_err(unavailable)?;
        Ok(completion_text(&body))
    }
}
