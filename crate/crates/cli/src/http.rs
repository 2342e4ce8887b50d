use std::time::Duration;

use serde_json::{json, Value};
use sqlbias::relevance::JudgeClient;

/// A judge behind an OpenAI-compatible chat-completions endpoint. Requests
/// use temperature 0 and one user message holding the prompt.
pub struct HttpJudge {
    agent: ureq::Agent,
    url: String,
    model: Option<String>,
    token: Option<String>,
}

impl HttpJudge {
    pub fn new(url: impl Into<String>, model: Option<String>, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpJudge {
            agent,
            url: url.into(),
            model,
            token,
        }
    }
}

/// Text of the first choice, accepting both chat and completion shapes.
pub fn extract_completion(body: &Value) -> Option<String> {
    let choice = body.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl JudgeClient for HttpJudge {
    fn complete(&self, prompt: &str) -> Result<String, String> {
        let mut body = json!({
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        if let Some(model) = &self.model {
            body["model"] = json!(model);
        }
        let mut request = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request.send_json(&body).map_err(|e| e.to_string())?;
        let status = response.status();
        if !status.is_success() {
            return Err(format!("endpoint returned HTTP {}", status.as_u16()));
        }
        let value: Value = response.body_mut().read_json().map_err(|e| e.to_string())?;
        extract_completion(&value).ok_or_else(|| "response has no completion text".to_string())
    }
}
