//! Scripted replies for offline runs.
//!
//! A replay script is a TOML file (or a directory holding `script.toml`):
//!
//! ```toml
//! version = 1
//!
//! [[reply]]
//! text = '''
//! ...generator reply, usually with ```tla and ```cfg blocks...
//! '''
//!
//! # Optional: what TLC printed for this reply, for checker-free runs.
//! [reply.tlc]
//! exit_code = 12
//! stdout = "../tlc/t3_violation.out"   # relative to the script file
//! ```
//!
//! Replies are served strictly in order; asking for one more than the script
//! holds is [`GenerateError::ReplayExhausted`].

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{Conversation, GenerateError, GenerationBackend};
use crate::runner::RawTlcOutput;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid replay script {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    version: u32,
    #[serde(default)]
    reply: Vec<ReplyEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplyEntry {
    text: String,
    tlc: Option<TlcEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TlcEntry {
    exit_code: Option<i32>,
    stdout: PathBuf,
    stderr: Option<PathBuf>,
    #[serde(default)]
    timed_out: bool,
}

/// TLC output recorded for one scripted reply.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedTlc {
    pub output: RawTlcOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedReply {
    pub text: String,
    pub tlc: Option<RecordedTlc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayScript {
    pub path: PathBuf,
    pub replies: Vec<ScriptedReply>,
}

fn read(path: &Path) -> Result<String, ScriptError> {
    fs::read_to_string(path).map_err(|source| ScriptError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ReplayScript {
    /// Loads `path`, or `path/script.toml` when `path` is a directory.
    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let file = if path.is_dir() {
            path.join("script.toml")
        } else {
            path.to_path_buf()
        };
        let parsed: ScriptFile = toml::from_str(&read(&file)?).map_err(|e| ScriptError::Format {
            path: file.clone(),
            message: e.to_string(),
        })?;
        if parsed.version != 1 {
            return Err(ScriptError::Format {
                path: file,
                message: format!("unsupported version {}", parsed.version),
            });
        }
        let base = file.parent().unwrap_or(Path::new("."));
        let mut replies = Vec::with_capacity(parsed.reply.len());
        for entry in parsed.reply {
            let tlc = match entry.tlc {
                None => None,
                Some(t) => Some(RecordedTlc {
                    output: RawTlcOutput {
                        exit_code: if t.timed_out { None } else { t.exit_code },
                        stdout_text: read(&base.join(&t.stdout))?,
                        stderr_text: match &t.stderr {
                            Some(p) => read(&base.join(p))?,
                            None => String::new(),
                        },
                        duration_s: 0.0,
                        timed_out: t.timed_out,
                    },
                }),
            };
            replies.push(ScriptedReply {
                text: entry.text,
                tlc,
            });
        }
        Ok(Self {
            path: file,
            replies,
        })
    }

    pub fn replies(&self) -> Vec<String> {
        self.replies.iter().map(|r| r.text.clone()).collect()
    }

    /// Recorded TLC outputs keyed by loop iteration (reply `i` is iteration
    /// `i + 1`).
    pub fn recordings(&self) -> Vec<(u32, RawTlcOutput)> {
        self.replies
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.tlc.as_ref().map(|t| (i as u32 + 1, t.output.clone())))
            .collect()
    }
}

/// Serves scripted replies in order.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    replies: Vec<String>,
    cursor: usize,
}

impl ReplayBackend {
    pub fn new(replies: Vec<String>) -> Self {
        Self { replies, cursor: 0 }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }
}

impl GenerationBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&mut self, _conversation: &Conversation) -> Result<String, GenerateError> {
        let reply = self
            .replies
            .get(self.cursor)
            .cloned()
            .ok_or(GenerateError::ReplayExhausted {
                served: self.cursor,
            })?;
        self.cursor += 1;
        Ok(reply)
    }
}
