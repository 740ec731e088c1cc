//! Running TLC as a child process.
//!
//! Every invocation gets a fresh directory under `workspace_root` holding
//! exactly `<Name>.tla` and `<Name>.cfg`. TLC runs with that directory as its
//! working directory, both output streams are drained on reader threads, and
//! the child is killed when the wall-clock limit passes.

use std::env;
use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::artifact::SpecArtifact;

/// Environment variable naming the TLA+ tools archive (`tla2tools.jar`).
pub const TOOLS_JAR_ENV: &str = "TLA2TOOLS_JAR";

/// Default command template. `{deadlock}` expands to `-deadlock` (which turns
/// TLC's deadlock check off) unless deadlock checking is enabled.
pub const DEFAULT_INVOCATION: &str =
    "{java} -XX:+UseParallelGC -cp {jar} tlc2.TLC -workers 1 {deadlock} -config {cfg} {module}";

pub const DEFAULT_TIMEOUT_S: f64 = 60.0;

/// Coarse outcome of one TLC run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictClass {
    Safe,
    Violation,
    CompileError,
    Timeout,
}

impl fmt::Display for VerdictClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictClass::Safe => "SAFE",
            VerdictClass::Violation => "VIOLATION",
            VerdictClass::CompileError => "COMPILE_ERROR",
            VerdictClass::Timeout => "TIMEOUT",
        })
    }
}

/// Which exit codes count as SAFE and VIOLATION; everything else is a
/// compile error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitCodeMap {
    pub safe: Vec<i32>,
    pub violation: Vec<i32>,
}

impl Default for ExitCodeMap {
    fn default() -> Self {
        Self {
            safe: vec![0],
            violation: vec![12],
        }
    }
}

impl ExitCodeMap {
    pub fn classify(&self, exit_code: Option<i32>, timed_out: bool) -> VerdictClass {
        match exit_code {
            _ if timed_out => VerdictClass::Timeout,
            Some(code) if self.safe.contains(&code) => VerdictClass::Safe,
            Some(code) if self.violation.contains(&code) => VerdictClass::Violation,
            // Killed by a signal without our timeout: nothing to classify on.
            _ => VerdictClass::CompileError,
        }
    }
}

/// Captured result of a TLC process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTlcOutput {
    /// Absent when the run timed out or the child died from a signal.
    pub exit_code: Option<i32>,
    pub stdout_text: String,
    pub stderr_text: String,
    pub duration_s: f64,
    pub timed_out: bool,
}

impl RawTlcOutput {
    /// A completed run with the given exit code and output, as replayed from
    /// a recording.
    pub fn recorded(exit_code: i32, stdout_text: impl Into<String>) -> Self {
        Self {
            exit_code: Some(exit_code),
            stdout_text: stdout_text.into(),
            stderr_text: String::new(),
            duration_s: 0.0,
            timed_out: false,
        }
    }

    /// Stdout followed by stderr (when non-empty).
    pub fn combined_text(&self) -> String {
        if self.stderr_text.is_empty() {
            self.stdout_text.clone()
        } else {
            format!("{}{}", self.stdout_text, self.stderr_text)
        }
    }
}

/// Classifies a run with the default exit-code table: timeout, 0, 12, other.
pub fn classify_exit(raw: &RawTlcOutput) -> VerdictClass {
    ExitCodeMap::default().classify(raw.exit_code, raw.timed_out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerConfig {
    /// Whitespace-separated command template with `{java}`, `{jar}`,
    /// `{module}`, `{cfg}`, `{workspace}` and `{deadlock}` placeholders.
    pub tlc_invocation: String,
    pub java: String,
    pub tools_jar: Option<PathBuf>,
    pub timeout_s: f64,
    pub workspace_root: PathBuf,
    pub keep_workspace: bool,
    pub check_deadlock: bool,
    pub exit_codes: ExitCodeMap,
}

impl Default for RunnerConfig {
    fn default() -> Self {
        Self {
            tlc_invocation: DEFAULT_INVOCATION.to_string(),
            java: default_java(),
            tools_jar: env::var_os(TOOLS_JAR_ENV).map(PathBuf::from),
            timeout_s: DEFAULT_TIMEOUT_S,
            workspace_root: env::temp_dir().join("tlaloop"),
            keep_workspace: false,
            check_deadlock: false,
            exit_codes: ExitCodeMap::default(),
        }
    }
}

fn default_java() -> String {
    match env::var_os("JAVA_HOME") {
        Some(home) => Path::new(&home).join("bin").join("java").display().to_string(),
        None => "java".to_string(),
    }
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("workspace I/O failed at {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot launch TLC: {0}")]
    Spawn(String),
    #[error("invalid runner configuration: {0}")]
    Config(String),
}

impl RunnerConfig {
    pub fn validate(&self) -> Result<(), RunnerError> {
        if !(self.timeout_s > 0.0) {
            return Err(RunnerError::Config(format!(
                "timeout_s must be positive, got {}",
                self.timeout_s
            )));
        }
        if self.tlc_invocation.split_whitespace().next().is_none() {
            return Err(RunnerError::Config("empty TLC invocation template".into()));
        }
        Ok(())
    }

    /// Expands the invocation template for `artifact` in `workspace`.
    pub fn command_line(
        &self,
        workspace: &Path,
        artifact: &SpecArtifact,
    ) -> Result<Vec<String>, RunnerError> {
        let mut argv = Vec::new();
        for token in self.tlc_invocation.split_whitespace() {
            if token == "{deadlock}" {
                if !self.check_deadlock {
                    argv.push("-deadlock".to_string());
                }
                continue;
            }
            let mut arg = token
                .replace("{java}", &self.java)
                .replace("{module}", &artifact.module_file_name())
                .replace("{cfg}", &artifact.config_file_name())
                .replace("{workspace}", &workspace.display().to_string());
            if arg.contains("{jar}") {
                let jar = self.tools_jar.as_ref().ok_or_else(|| {
                    RunnerError::Spawn(format!(
                        "TLA+ tools archive not configured (set {TOOLS_JAR_ENV} or --tlc-path)"
                    ))
                })?;
                if !jar.is_file() {
                    return Err(RunnerError::Spawn(format!(
                        "TLA+ tools archive {} does not exist",
                        jar.display()
                    )));
                }
                arg = arg.replace("{jar}", &jar.display().to_string());
            }
            argv.push(arg);
        }
        Ok(argv)
    }
}

/// Creates a fresh directory for one invocation and writes the artifact
/// into it.
pub fn prepare_workspace(
    artifact: &SpecArtifact,
    config: &RunnerConfig,
) -> Result<PathBuf, RunnerError> {
    let root = &config.workspace_root;
    fs::create_dir_all(root).map_err(|source| RunnerError::Io {
        path: root.clone(),
        source,
    })?;
    let dir = tempfile::Builder::new()
        .prefix(&format!("{}-it{}-", artifact.module_name, artifact.iteration))
        .tempdir_in(root)
        .map_err(|source| RunnerError::Io {
            path: root.clone(),
            source,
        })?
        .keep();
    artifact.write_to(&dir).map_err(|source| RunnerError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

/// Removes the workspace unless the config asks to keep it.
pub fn finish_workspace(workspace: &Path, config: &RunnerConfig) -> Result<(), RunnerError> {
    if config.keep_workspace {
        return Ok(());
    }
    fs::remove_dir_all(workspace).map_err(|source| RunnerError::Io {
        path: workspace.to_path_buf(),
        source,
    })
}

fn drain<R: Read + Send + 'static>(stream: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut s) = stream {
            let _ = s.read_to_end(&mut buf);
        }
        buf
    })
}

fn wait_with_limit(child: &mut Child, limit: Duration) -> io::Result<(Option<i32>, bool)> {
    match child.wait_timeout(limit)? {
        Some(status) => Ok((status.code(), false)),
        None => {
            let _ = child.kill();
            child.wait()?;
            Ok((None, true))
        }
    }
}

/// Runs TLC in a prepared workspace and captures everything it prints.
pub fn run_tlc(
    workspace: &Path,
    artifact: &SpecArtifact,
    config: &RunnerConfig,
) -> Result<RawTlcOutput, RunnerError> {
    config.validate()?;
    let argv = config.command_line(workspace, artifact)?;
    let (program, args) = argv.split_first().expect("validated non-empty template");
    log::debug!("running {argv:?} in {}", workspace.display());

    let started = Instant::now();
    let mut child = Command::new(program)
        .args(args)
        .current_dir(workspace)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| RunnerError::Spawn(format!("{program}: {e}")))?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let (exit_code, timed_out) =
        wait_with_limit(&mut child, Duration::from_secs_f64(config.timeout_s))
            .map_err(|e| RunnerError::Spawn(format!("waiting on {program}: {e}")))?;
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let duration_s = started.elapsed().as_secs_f64();

    Ok(RawTlcOutput {
        exit_code: if timed_out { None } else { exit_code },
        stdout_text: String::from_utf8_lossy(&stdout).into_owned(),
        stderr_text: String::from_utf8_lossy(&stderr).into_owned(),
        duration_s,
        timed_out,
    })
}
