//! Model-checker strategies.
//!
//! The loop only needs "give me TLC's output for this artifact". Two
//! strategies provide it: [`TlcProcess`] runs the real checker in a fresh
//! workspace, [`RecordedChecker`] serves outputs captured earlier, keyed by
//! loop iteration, so full runs can be replayed without Java.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::artifact::SpecArtifact;
use crate::gateway::ReplayScript;
use crate::registry::Registry;
use crate::runner::{finish_workspace, prepare_workspace, run_tlc, RawTlcOutput, RunnerConfig, RunnerError};

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error("no recorded TLC output for iteration {iteration}")]
    NoRecording { iteration: u32 },
}

/// Produces TLC output for an artifact.
pub trait ModelChecker: Send {
    fn name(&self) -> &str;

    fn check(&mut self, artifact: &SpecArtifact) -> Result<RawTlcOutput, CheckerError>;

    /// How many times [`ModelChecker::check`] has been called.
    fn invocations(&self) -> usize;
}

/// Runs TLC as a child process, one workspace per call.
#[derive(Debug, Clone)]
pub struct TlcProcess {
    pub config: RunnerConfig,
    calls: usize,
}

impl TlcProcess {
    pub fn new(config: RunnerConfig) -> Self {
        Self { config, calls: 0 }
    }
}

impl ModelChecker for TlcProcess {
    fn name(&self) -> &str {
        "tlc"
    }

    fn check(&mut self, artifact: &SpecArtifact) -> Result<RawTlcOutput, CheckerError> {
        self.calls += 1;
        self.config.validate()?;
        let workspace = prepare_workspace(artifact, &self.config)?;
        let result = run_tlc(&workspace, artifact, &self.config);
        if let Err(e) = finish_workspace(&workspace, &self.config) {
            log::warn!("{e}");
        } else if self.config.keep_workspace {
            log::info!("kept TLC workspace {}", workspace.display());
        }
        Ok(result?)
    }

    fn invocations(&self) -> usize {
        self.calls
    }
}

/// Serves recorded TLC outputs keyed by `artifact.iteration`.
#[derive(Debug, Clone, Default)]
pub struct RecordedChecker {
    outputs: BTreeMap<u32, RawTlcOutput>,
    calls: usize,
}

impl RecordedChecker {
    pub fn new(outputs: impl IntoIterator<Item = (u32, RawTlcOutput)>) -> Self {
        Self {
            outputs: outputs.into_iter().collect(),
            calls: 0,
        }
    }

    pub fn from_script(script: &ReplayScript) -> Self {
        Self::new(script.recordings())
    }
}

impl ModelChecker for RecordedChecker {
    fn name(&self) -> &str {
        "recorded"
    }

    fn check(&mut self, artifact: &SpecArtifact) -> Result<RawTlcOutput, CheckerError> {
        self.calls += 1;
        self.outputs
            .get(&artifact.iteration)
            .cloned()
            .ok_or(CheckerError::NoRecording {
                iteration: artifact.iteration,
            })
    }

    fn invocations(&self) -> usize {
        self.calls
    }
}

/// Inputs available to checker factories.
#[derive(Debug, Clone, Default)]
pub struct CheckerParams {
    pub runner: RunnerConfig,
    /// Replay script holding recorded outputs (`recorded` only).
    pub fixture: Option<PathBuf>,
}

pub type CheckerRegistry = Registry<dyn ModelChecker, CheckerParams>;

/// Registry with the `tlc` and `recorded` checkers.
pub fn checker_registry() -> CheckerRegistry {
    let mut reg = CheckerRegistry::new("model checker");
    reg.register("tlc", |p: &CheckerParams| {
        p.runner.validate().map_err(|e| e.to_string())?;
        Ok(Box::new(TlcProcess::new(p.runner.clone())))
    });
    reg.register("recorded", |p: &CheckerParams| {
        let fixture = p
            .fixture
            .as_ref()
            .ok_or("the recorded checker needs a fixture with recorded TLC output")?;
        let script = ReplayScript::load(fixture).map_err(|e| e.to_string())?;
        Ok(Box::new(RecordedChecker::from_script(&script)))
    });
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn artifact(iteration: u32) -> SpecArtifact {
        SpecArtifact {
            module_name: "M".into(),
            module_text: "---- MODULE M ----\n====\n".into(),
            config_text: "INIT Init\n".into(),
            iteration,
        }
    }

    #[test]
    fn recorded_checker_is_keyed_by_iteration() {
        let mut c = RecordedChecker::new([(2, RawTlcOutput::recorded(12, "out"))]);
        assert!(matches!(
            c.check(&artifact(1)),
            Err(CheckerError::NoRecording { iteration: 1 })
        ));
        assert_eq!(c.check(&artifact(2)).unwrap().exit_code, Some(12));
        assert_eq!(c.invocations(), 2);
    }

    #[test]
    fn tlc_process_reports_missing_tools() {
        let root = tempfile::tempdir().unwrap();
        let mut c = TlcProcess::new(RunnerConfig {
            tools_jar: Some("/nonexistent/tla2tools.jar".into()),
            workspace_root: root.path().to_path_buf(),
            ..RunnerConfig::default()
        });
        assert!(matches!(c.check(&artifact(1)), Err(CheckerError::Runner(RunnerError::Spawn(_)))));
        assert_eq!(c.invocations(), 1);
    }

    #[test]
    fn registry_requires_fixture_for_recorded() {
        let reg = checker_registry();
        assert_eq!(reg.names(), vec!["recorded", "tlc"]);
        assert!(reg.create("recorded", &CheckerParams::default()).is_err());
        assert!(reg.create("tlc", &CheckerParams::default()).is_ok());
    }
}
