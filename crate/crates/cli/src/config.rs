//! Optional TOML configuration file.
//!
//! Values here sit between built-in defaults and environment variables or
//! flags: flags > environment > file > defaults.
//!
//! ```toml
//! system_prompt = "prompts/system.md"
//! templates = "templates/"
//!
//! [loop]
//! max_iterations = 4
//! on_safe = "feedback"        # or "terminate"
//! lint_blocking = true
//! confirm_violation = false
//!
//! [tlc]
//! tools_jar = "/opt/tla/tla2tools.jar"
//! java = "/usr/bin/java"
//! invocation = "{java} -XX:+UseParallelGC -cp {jar} tlc2.TLC -workers 1 {deadlock} -config {cfg} {module}"
//! timeout_s = 60
//! workspace_root = "/tmp/tlaloop"
//! keep_workspace = false
//! check_deadlock = false
//! safe_exit_codes = [0]
//! violation_exit_codes = [12]
//!
//! [generator]
//! backend = "http"
//! endpoint = "https://api.example.com/v1/chat/completions"
//! model = "some-model"
//! temperature = 0.0
//! api_key_env = "TLALOOP_API_KEY"
//! timeout_s = 300
//!
//! [feedback]
//! max_body_chars = 4000
//! low_coverage_threshold = 5
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use tlaloop_core::repl::OnSafe;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system_prompt: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    #[serde(default, rename = "loop")]
    pub loop_: LoopSection,
    #[serde(default)]
    pub tlc: TlcSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub feedback: FeedbackSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    pub max_iterations: Option<u32>,
    pub on_safe: Option<OnSafe>,
    pub lint_blocking: Option<bool>,
    pub confirm_violation: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlcSection {
    pub tools_jar: Option<PathBuf>,
    pub java: Option<String>,
    pub invocation: Option<String>,
    pub timeout_s: Option<f64>,
    pub workspace_root: Option<PathBuf>,
    pub keep_workspace: Option<bool>,
    pub check_deadlock: Option<bool>,
    pub safe_exit_codes: Option<Vec<i32>>,
    pub violation_exit_codes: Option<Vec<i32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub backend: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub api_key_env: Option<String>,
    pub timeout_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub max_body_chars: Option<usize>,
    pub low_coverage_threshold: Option<u64>,
}

impl FileConfig {
    /// Loads `path`; relative paths inside the file resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        resolve(&mut config.system_prompt);
        resolve(&mut config.templates);
        resolve(&mut config.tlc.tools_jar);
        resolve(&mut config.tlc.workspace_root);
        Ok(config)
    }
}
