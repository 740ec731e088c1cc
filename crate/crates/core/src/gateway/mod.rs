//! Conversation state and text-generation backends.
//!
//! A [`Conversation`] is the full role-tagged history sent to the generator
//! on every call; it is never trimmed. Backends implement
//! [`GenerationBackend`] and are looked up by name in [`backend_registry`]:
//! `http` talks to a chat-completion endpoint, `replay` serves scripted
//! replies from a fixture.

mod http;
mod replay;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;

pub use http::{HttpBackend, HttpSettings, API_KEY_ENV};
pub use replay::{RecordedTlc, ReplayBackend, ReplayScript, ScriptedReply};

/// Built-in system prompt.
pub const SYSTEM_PROMPT: &str = include_str!("../../assets/system_prompt.md");
/// Template of the first user turn; `{description}` is the target text.
pub const TASK_TEMPLATE: &str = include_str!("../../assets/task.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("turn order violated: {role} cannot follow {previous}")]
pub struct RoleOrderError {
    pub previous: String,
    pub role: Role,
}

/// System prompt followed by strictly alternating user/assistant turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    turns: Vec<Turn>,
}

impl Conversation {
    /// Starts with the system prompt and the first user message.
    pub fn new(system_prompt: impl Into<String>, first_user: impl Into<String>) -> Self {
        Self {
            turns: vec![
                Turn {
                    role: Role::System,
                    content: system_prompt.into(),
                },
                Turn {
                    role: Role::User,
                    content: first_user.into(),
                },
            ],
        }
    }

    /// Renders the task template around a target description.
    pub fn for_target(system_prompt: impl Into<String>, description: &str) -> Self {
        Self::new(system_prompt, TASK_TEMPLATE.replace("{description}", description.trim()))
    }

    pub fn append_turn(&mut self, role: Role, content: impl Into<String>) -> Result<(), RoleOrderError> {
        let previous = self.turns.last().map(|t| t.role);
        let ok = match (previous, role) {
            (_, Role::System) => false,
            (None, _) => role == Role::User,
            (Some(Role::System), r) => r == Role::User,
            (Some(p), r) => p != r,
        };
        if !ok {
            return Err(RoleOrderError {
                previous: previous.map_or_else(|| "nothing".to_string(), |r| r.to_string()),
                role,
            });
        }
        self.turns.push(Turn {
            role,
            content: content.into(),
        });
        Ok(())
    }

    pub fn system_prompt(&self) -> Option<&str> {
        self.turns
            .first()
            .filter(|t| t.role == Role::System)
            .map(|t| t.content.as_str())
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn last_role(&self) -> Option<Role> {
        self.turns.last().map(|t| t.role)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("conversation must end with a user turn before generating")]
    NotUserTurn,
    #[error("generation backend failed: {0}")]
    Backend(String),
    #[error("replay script exhausted after {served} replies")]
    ReplayExhausted { served: usize },
}

/// A source of generator replies.
pub trait GenerationBackend: Send {
    fn name(&self) -> &str;

    /// Produces the next assistant reply for the whole conversation.
    fn complete(&mut self, conversation: &Conversation) -> Result<String, GenerateError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    pub duration_s: f64,
}

/// Calls `backend` on a conversation that ends with a user turn and times
/// the call.
pub fn generate(
    conversation: &Conversation,
    backend: &mut dyn GenerationBackend,
) -> Result<Generation, GenerateError> {
    if conversation.last_role() != Some(Role::User) {
        return Err(GenerateError::NotUserTurn);
    }
    let started = Instant::now();
    let text = backend.complete(conversation)?;
    Ok(Generation {
        text,
        duration_s: started.elapsed().as_secs_f64(),
    })
}

/// Backend-specific settings as flat key/value pairs (`endpoint`, `model`,
/// `temperature`, `api_key_env`, `timeout_s` for `http`; `fixture` for
/// `replay`).
pub type BackendParams = BTreeMap<String, String>;

pub type BackendRegistry = Registry<dyn GenerationBackend, BackendParams>;

/// Registry with the `http` and `replay` backends.
pub fn backend_registry() -> BackendRegistry {
    let mut reg = BackendRegistry::new("generation backend");
    reg.register("http", |params: &BackendParams| {
        let settings = HttpSettings::from_params(params)?;
        Ok(Box::new(HttpBackend::new(settings).map_err(|e| e.to_string())?))
    });
    reg.register("replay", |params: &BackendParams| {
        let fixture = params
            .get("fixture")
            .ok_or("the replay backend needs a `fixture` path")?;
        let script = ReplayScript::load(fixture.as_ref()).map_err(|e| e.to_string())?;
        Ok(Box::new(ReplayBackend::new(script.replies())))
    });
    reg
}
