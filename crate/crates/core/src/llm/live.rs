use super::{Backend, CallContext, CompletionRequest, LlmError, Role};
use serde_json::json;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Full URL of an OpenAI-style `chat/completions` endpoint.
    pub endpoint: String,
    pub credential_env: String,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            credential_env: "OPENAI_API_KEY".into(),
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
        }
    }
}

/// Blocking HTTP chat-completion client.
pub struct LiveBackend {
    config: LiveConfig,
    credential: String,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl LiveBackend {
    /// Reads the credential from the configured environment variable.
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        let credential = std::env::var(&config.credential_env)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| LlmError::CredentialMissing(config.credential_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(LiveBackend { config, credential, client })
    }

    pub fn request_body(request: &CompletionRequest) -> serde_json::Value {
        let messages: Vec<_> = request
            .messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                json!({"role": role, "content": m.content})
            })
            .collect();
        json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": messages,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, Attempt> {
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.credential)
            .json(body)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Retry(e.to_string()))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>())));
        }
        extract_content(&text).ok_or_else(|| Attempt::Fatal("response has no choices[0].message.content".into()))
    }
}

fn extract_content(body: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

impl Backend for LiveBackend {
    fn complete(&self, _ctx: &CallContext, request: &CompletionRequest) -> Result<String, LlmError> {
        let body = Self::request_body(request);
        let mut backoff = self.config.initial_backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(message)) => return Err(LlmError::Transport { attempts, message }),
                Err(Attempt::Retry(message)) => {
                    if attempts > self.config.max_retries {
                        return Err(LlmError::Transport { attempts, message });
                    }
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, Stage};

    #[test]
    fn missing_credential() {
        let config = LiveConfig { credential_env: "TOOLCRAFT_TEST_UNSET_VAR".into(), ..Default::default() };
        assert!(matches!(LiveBackend::new(config), Err(LlmError::CredentialMissing(v)) if v == "TOOLCRAFT_TEST_UNSET_VAR"));
    }

    #[test]
    fn body_carries_request_verbatim() {
        let req = CompletionRequest {
            model_id: "gpt-4".into(),
            temperature: 0.0,
            messages: vec![ChatMessage::system("s"), ChatMessage::user("u\n  x")],
            max_tokens: 100,
        };
        let body = LiveBackend::request_body(&req);
        assert_eq!(body["messages"][1]["content"], "u\n  x");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["model"], "gpt-4");
    }

    #[test]
    fn content_extraction() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"Plan:\n1. walk"}}]}"#;
        assert_eq!(extract_content(body).unwrap(), "Plan:\n1. walk");
        assert!(extract_content("{}").is_none());
    }

    #[test]
    fn unreachable_endpoint_retries_then_fails() {
        std::env::set_var("TOOLCRAFT_TEST_KEY", "k");
        let config = LiveConfig {
            endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
            credential_env: "TOOLCRAFT_TEST_KEY".into(),
            max_retries: 2,
            initial_backoff: Duration::from_millis(1),
            timeout: Duration::from_secs(2),
        };
        let backend = LiveBackend::new(config).unwrap();
        let ctx = CallContext { task: "t".into(), method: "m".into(), stage: Stage::Coder, ordinal: 0 };
        let req = CompletionRequest { model_id: "m".into(), temperature: 0.0, messages: vec![ChatMessage::user("x")], max_tokens: 1 };
        assert!(matches!(backend.complete(&ctx, &req), Err(LlmError::Transport { attempts: 3, .. })));
    }
}
