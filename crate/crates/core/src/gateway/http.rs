//! Chat-completion backend over HTTP.
//!
//! Sends the whole conversation as role-tagged `messages` to an
//! OpenAI-style `/chat/completions` endpoint and returns
//! `choices[0].message.content`.

use std::env;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendParams, Conversation, GenerateError, GenerationBackend, Role};

/// Default environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "TLALOOP_API_KEY";

const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub api_key_env: String,
    pub timeout_s: f64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            api_key_env: API_KEY_ENV.into(),
            timeout_s: 300.0,
        }
    }
}

impl HttpSettings {
    pub fn from_params(params: &BackendParams) -> Result<Self, String> {
        let mut s = Self::default();
        for (key, value) in params {
            match key.as_str() {
                "endpoint" => s.endpoint = value.clone(),
                "model" => s.model = value.clone(),
                "temperature" => {
                    s.temperature = value
                        .parse()
                        .map_err(|_| format!("temperature `{value}` is not a number"))?
                }
                "api_key_env" => s.api_key_env = value.clone(),
                "timeout_s" => {
                    s.timeout_s = value
                        .parse()
                        .map_err(|_| format!("timeout_s `{value}` is not a number"))?
                }
                "fixture" => {}
                other => return Err(format!("unknown http backend parameter `{other}`")),
            }
        }
        Ok(s)
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<ChatMessage<'a>>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

pub struct HttpBackend {
    settings: HttpSettings,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, GenerateError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(settings.timeout_s))
            .build()
            .map_err(|e| GenerateError::Backend(e.to_string()))?;
        Ok(Self { settings, client })
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

impl GenerationBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&mut self, conversation: &Conversation) -> Result<String, GenerateError> {
        let request = ChatRequest {
            model: &self.settings.model,
            temperature: self.settings.temperature,
            messages: conversation
                .turns()
                .iter()
                .map(|t| ChatMessage {
                    role: role_name(t.role),
                    content: &t.content,
                })
                .collect(),
        };
        let mut builder = self.client.post(&self.settings.endpoint).json(&request);
        if let Ok(key) = env::var(&self.settings.api_key_env) {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| GenerateError::Backend(format!("request to {} failed: {e}", self.settings.endpoint)))?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| GenerateError::Backend(format!("reading response: {e}")))?;
        if !status.is_success() {
            let snippet: String = body.chars().take(500).collect();
            return Err(GenerateError::Backend(format!("HTTP {status}: {snippet}")));
        }
        let parsed: ChatResponse = serde_json::from_str(&body)
            .map_err(|e| GenerateError::Backend(format!("malformed completion response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GenerateError::Backend("completion response has no content".into()))
    }
}
