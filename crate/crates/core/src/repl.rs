//! The generate-check-feedback loop.
//!
//! Each iteration asks the generator for a module/config pair, extracts and
//! lints it, model-checks it, parses the result and feeds a synthesized
//! message back as the next user turn. The loop ends with a counterexample
//! ([`Terminal::BugFound`]), a safe verdict that is accepted as final, an
//! exhausted iteration budget, or an unrecoverable error.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::artifact::{extract_artifacts, lint_boundedness, LintReport, SpecArtifact};
use crate::checker::ModelChecker;
use crate::feedback::{FeedbackMessage, FeedbackOptions, FeedbackSynth, FeedbackTemplates};
use crate::gateway::{generate, Conversation, GenerationBackend, Role, SYSTEM_PROMPT};
use crate::runner::{ExitCodeMap, VerdictClass};
use crate::trace::{parse_verdict_with, CounterexampleTrace, TlcVerdict};

/// Version of the JSON run-record layout.
pub const RUN_RECORD_SCHEMA_VERSION: u32 = 1;

/// What to do when TLC finds no violation before the last iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnSafe {
    /// Treat the model as wrong and ask for a remodel.
    Feedback,
    /// Accept the safe verdict and stop.
    Terminate,
}

#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub max_iterations: u32,
    pub on_safe: OnSafe,
    /// Skip TLC for artifacts with lint errors and send the findings instead.
    pub lint_blocking: bool,
    /// After a violation, show the trace to the generator once more and
    /// record its reply.
    pub confirm_violation: bool,
    pub system_prompt: String,
    pub templates: FeedbackTemplates,
    pub feedback: FeedbackOptions,
    pub exit_codes: ExitCodeMap,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_iterations: 4,
            on_safe: OnSafe::Feedback,
            lint_blocking: true,
            confirm_violation: false,
            system_prompt: SYSTEM_PROMPT.to_string(),
            templates: FeedbackTemplates::default(),
            feedback: FeedbackOptions::default(),
            exit_codes: ExitCodeMap::default(),
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    BugFound,
    SafeTerminal,
    BudgetExhausted,
    Aborted { reason: String },
}

impl Terminal {
    pub fn label(&self) -> &'static str {
        match self {
            Terminal::BugFound => "BUG_FOUND",
            Terminal::SafeTerminal => "SAFE",
            Terminal::BudgetExhausted => "BUDGET_EXHAUSTED",
            Terminal::Aborted { .. } => "ABORTED",
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Aborted { reason } => write!(f, "ABORTED ({reason})"),
            other => f.write_str(other.label()),
        }
    }
}

/// Everything that happened in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub response_text: String,
    pub t_gen_s: f64,
    pub artifact: Option<SpecArtifact>,
    pub extraction_error: Option<String>,
    pub lint: Option<LintReport>,
    pub verdict: Option<TlcVerdict>,
    pub t_tlc_s: Option<f64>,
    pub feedback: Option<FeedbackMessage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub iterations: u32,
    pub tlc_invocations: u32,
    pub t_gen_total_s: f64,
    pub t_tlc_total_s: f64,
    pub wall_s: f64,
    pub trace_depth: Option<usize>,
    pub states_explored: Option<u64>,
}

/// Complete, serializable account of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub target_id: String,
    pub terminal: Terminal,
    pub metrics: Metrics,
    pub iterations: Vec<IterationRecord>,
    pub final_artifact: Option<SpecArtifact>,
    pub counterexample: Option<CounterexampleTrace>,
    /// Generator reply to the confirmation turn, when requested.
    pub confirmation: Option<String>,
    pub conversation: Conversation,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records always serialize")
    }

    /// Writes `<target>.run.json` and, when present, the final module and
    /// config into `dir`. Returns the paths written.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.run.json", self.target_id));
        fs::write(&json, self.to_json() + "\n")?;
        let mut written = vec![json];
        if let Some(artifact) = &self.final_artifact {
            let (tla, cfg) = artifact.write_to(dir)?;
            written.extend([tla, cfg]);
        }
        Ok(written)
    }
}

struct Run {
    synth: FeedbackSynth,
    conversation: Conversation,
    iterations: Vec<IterationRecord>,
    metrics: Metrics,
}

impl Run {
    /// Sends `feedback` as the next user turn.
    fn push_feedback(&mut self, feedback: &FeedbackMessage) {
        self.conversation
            .append_turn(Role::User, feedback.body.clone())
            .expect("feedback always follows an assistant turn");
    }
}

/// Runs the loop for one target until it reaches a terminal state.
pub fn run_loop(
    target_id: &str,
    description: &str,
    config: &LoopConfig,
    backend: &mut dyn GenerationBackend,
    checker: &mut dyn ModelChecker,
) -> RunRecord {
    let started = Instant::now();
    let mut run = Run {
        synth: FeedbackSynth::new(config.templates.clone(), config.feedback.clone()),
        conversation: Conversation::for_target(config.system_prompt.clone(), description),
        iterations: Vec::new(),
        metrics: Metrics::default(),
    };
    let mut counterexample = None;
    let mut final_artifact = None;
    let mut confirmation = None;

    let terminal = 'outer: {
        for iteration in 1..=config.max_iterations {
            let last = iteration == config.max_iterations;
            run.metrics.iterations = iteration;
            log::info!("{target_id}: iteration {iteration}");

            let generation = match generate(&run.conversation, backend) {
                Ok(g) => g,
                Err(e) => break 'outer Terminal::Aborted { reason: e.to_string() },
            };
            run.metrics.t_gen_total_s += generation.duration_s;
            run.conversation
                .append_turn(Role::Assistant, generation.text.clone())
                .expect("generation always follows a user turn");
            let mut record = IterationRecord {
                iteration,
                response_text: generation.text.clone(),
                t_gen_s: generation.duration_s,
                artifact: None,
                extraction_error: None,
                lint: None,
                verdict: None,
                t_tlc_s: None,
                feedback: None,
            };

            let mut artifact = match extract_artifacts(&generation.text) {
                Ok(a) => a,
                Err(e) => {
                    let fb = run.synth.extraction_failure(&e);
                    record.extraction_error = Some(e.to_string());
                    if !last {
                        run.push_feedback(&fb);
                    }
                    record.feedback = Some(fb);
                    run.iterations.push(record);
                    continue;
                }
            };
            artifact.iteration = iteration;
            final_artifact = Some(artifact.clone());
            record.artifact = Some(artifact.clone());

            let lint = lint_boundedness(&artifact);
            let blocked = config.lint_blocking && !lint.passed;
            record.lint = Some(lint.clone());
            if blocked {
                let fb = run.synth.lint_failure(&lint);
                if !last {
                    run.push_feedback(&fb);
                }
                record.feedback = Some(fb);
                run.iterations.push(record);
                continue;
            }

            run.metrics.tlc_invocations += 1;
            let raw = match checker.check(&artifact) {
                Ok(raw) => raw,
                Err(e) => {
                    run.iterations.push(record);
                    break 'outer Terminal::Aborted { reason: e.to_string() };
                }
            };
            run.metrics.t_tlc_total_s += raw.duration_s;
            record.t_tlc_s = Some(raw.duration_s);
            let verdict = match parse_verdict_with(&raw, &config.exit_codes) {
                Ok(v) => v,
                Err(e) => {
                    run.iterations.push(record);
                    break 'outer Terminal::Aborted { reason: e.to_string() };
                }
            };
            run.metrics.states_explored = verdict.states_explored;
            let fb = run.synth.synthesize(&verdict);
            record.verdict = Some(verdict.clone());

            match verdict.class {
                VerdictClass::Violation => {
                    run.metrics.trace_depth = verdict.trace.as_ref().map(CounterexampleTrace::depth);
                    counterexample = verdict.trace.clone();
                    if config.confirm_violation {
                        run.push_feedback(&fb);
                        match generate(&run.conversation, backend) {
                            Ok(g) => {
                                run.metrics.t_gen_total_s += g.duration_s;
                                run.conversation
                                    .append_turn(Role::Assistant, g.text.clone())
                                    .expect("generation always follows a user turn");
                                confirmation = Some(g.text);
                            }
                            Err(e) => log::warn!("{target_id}: confirmation turn failed: {e}"),
                        }
                    }
                    record.feedback = Some(fb);
                    run.iterations.push(record);
                    break 'outer Terminal::BugFound;
                }
                VerdictClass::Safe if config.on_safe == OnSafe::Terminate || last => {
                    record.feedback = Some(fb);
                    run.iterations.push(record);
                    break 'outer Terminal::SafeTerminal;
                }
                _ => {
                    if !last {
                        run.push_feedback(&fb);
                    }
                    record.feedback = Some(fb);
                    run.iterations.push(record);
                }
            }
        }
        Terminal::BudgetExhausted
    };

    run.metrics.wall_s = started.elapsed().as_secs_f64();
    log::info!("{target_id}: {terminal} after {} iterations", run.metrics.iterations);
    RunRecord {
        schema_version: RUN_RECORD_SCHEMA_VERSION,
        target_id: target_id.to_string(),
        terminal,
        metrics: run.metrics,
        iterations: run.iterations,
        final_artifact,
        counterexample,
        confirmation,
        conversation: run.conversation,
    }
}

/// Outcome of model-checking a hand-written specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroundTruthOutcome {
    Violation,
    Safe,
    /// The checker could not produce a verdict (compile error, timeout or
    /// launch failure).
    Aborted,
}

impl fmt::Display for GroundTruthOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroundTruthOutcome::Violation => "VIOLATION",
            GroundTruthOutcome::Safe => "SAFE",
            GroundTruthOutcome::Aborted => "ABORTED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub outcome: GroundTruthOutcome,
    pub trace_depth: Option<usize>,
    pub states_explored: Option<u64>,
    pub t_tlc_s: f64,
    pub verdict: Option<TlcVerdict>,
    /// Why no verdict was produced, for [`GroundTruthOutcome::Aborted`].
    pub reason: Option<String>,
}

/// Checks a reference specification directly, bypassing generation.
pub fn check_ground_truth(
    artifact: &SpecArtifact,
    checker: &mut dyn ModelChecker,
    exit_codes: &ExitCodeMap,
) -> GroundTruth {
    let aborted = |reason: String, t_tlc_s: f64, verdict: Option<TlcVerdict>| GroundTruth {
        outcome: GroundTruthOutcome::Aborted,
        trace_depth: None,
        states_explored: verdict.as_ref().and_then(|v| v.states_explored),
        t_tlc_s,
        verdict,
        reason: Some(reason),
    };
    let raw = match checker.check(artifact) {
        Ok(raw) => raw,
        Err(e) => return aborted(e.to_string(), 0.0, None),
    };
    let t_tlc_s = raw.duration_s;
    let verdict = match parse_verdict_with(&raw, exit_codes) {
        Ok(v) => v,
        Err(e) => return aborted(e.to_string(), t_tlc_s, None),
    };
    let outcome = match verdict.class {
        VerdictClass::Violation => GroundTruthOutcome::Violation,
        VerdictClass::Safe => GroundTruthOutcome::Safe,
        VerdictClass::CompileError | VerdictClass::Timeout => {
            let reason = format!("TLC verdict {}", verdict.class);
            return aborted(reason, t_tlc_s, Some(verdict));
        }
    };
    GroundTruth {
        outcome,
        trace_depth: verdict.trace.as_ref().map(CounterexampleTrace::depth),
        states_explored: verdict.states_explored,
        t_tlc_s,
        verdict: Some(verdict),
        reason: None,
    }
}
