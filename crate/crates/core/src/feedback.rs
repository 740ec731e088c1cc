//! Feedback turns: a verdict (or an extraction/lint failure) rendered into
//! the user message that drives the next generation.
//!
//! Wording lives in template files with `{slot}` placeholders. The built-in
//! set is compiled in from `assets/feedback/`; a directory with files of the
//! same names overrides it.
//!
//! Slot vocabulary:
//!
//! | template              | slots                                                                      |
//! |-----------------------|----------------------------------------------------------------------------|
//! | `violation`           | `invariant`, `depth`, `transitions`, `actions`, `trace`, `last_action`, `states_explored` |
//! | `compile_error`       | `excerpt`                                                                  |
//! | `safe`                | `states_explored`                                                          |
//! | `safe_low_coverage`   | `states_explored`                                                          |
//! | `timeout`             | `timeout_s`                                                                |
//! | `extraction_error`    | `error`                                                                    |
//! | `lint_error`          | `findings`                                                                 |

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{ExtractionError, LintReport};
use crate::runner::VerdictClass;
use crate::trace::{CounterexampleTrace, TlcVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Directive {
    ConfirmFinding,
    TightenGuard,
    FixSyntax,
    Remodel,
    EscalateBounds,
    ShrinkBounds,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Directive::ConfirmFinding => "CONFIRM_FINDING",
            Directive::TightenGuard => "TIGHTEN_GUARD",
            Directive::FixSyntax => "FIX_SYNTAX",
            Directive::Remodel => "REMODEL",
            Directive::EscalateBounds => "ESCALATE_BOUNDS",
            Directive::ShrinkBounds => "SHRINK_BOUNDS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    /// `None` when the reply never reached TLC (extraction or lint failure).
    pub verdict_class: Option<VerdictClass>,
    pub directive: Directive,
    /// Second option offered alongside `directive` (violations only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<Directive>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackTemplates {
    pub violation: String,
    pub compile_error: String,
    pub safe: String,
    pub safe_low_coverage: String,
    pub timeout: String,
    pub extraction_error: String,
    pub lint_error: String,
}

impl Default for FeedbackTemplates {
    fn default() -> Self {
        Self {
            violation: include_str!("../assets/feedback/violation.txt").into(),
            compile_error: include_str!("../assets/feedback/compile_error.txt").into(),
            safe: include_str!("../assets/feedback/safe.txt").into(),
            safe_low_coverage: include_str!("../assets/feedback/safe_low_coverage.txt").into(),
            timeout: include_str!("../assets/feedback/timeout.txt").into(),
            extraction_error: include_str!("../assets/feedback/extraction_error.txt").into(),
            lint_error: include_str!("../assets/feedback/lint_error.txt").into(),
        }
    }
}

impl FeedbackTemplates {
    /// Built-in templates, with any `<name>.txt` present in `dir` taking
    /// precedence.
    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let mut t = Self::default();
        let slots: [(&str, &mut String); 7] = [
            ("violation", &mut t.violation),
            ("compile_error", &mut t.compile_error),
            ("safe", &mut t.safe),
            ("safe_low_coverage", &mut t.safe_low_coverage),
            ("timeout", &mut t.timeout),
            ("extraction_error", &mut t.extraction_error),
            ("lint_error", &mut t.lint_error),
        ];
        for (name, slot) in slots {
            let path = dir.join(format!("{name}.txt"));
            if path.is_file() {
                *slot = fs::read_to_string(&path)?;
            }
        }
        Ok(t)
    }
}

/// Replaces `{slot}` occurrences in one pass, so slot values containing
/// braces (TLA+ sets, parser output) are never re-expanded. Unknown slots
/// are left as written.
pub fn render_template(template: &str, slots: &HashMap<&str, String>) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}');
        let key = close.map(|c| &after[..c]);
        match key.and_then(|k| slots.get(k).map(|v| (k, v))) {
            Some((k, value)) => {
                out.push_str(value);
                rest = &after[k.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackOptions {
    /// Upper bound on a violation body, in characters.
    pub max_body_chars: usize,
    /// A SAFE verdict with fewer distinct states than this asks for larger
    /// bounds instead of a remodel.
    pub low_coverage_threshold: u64,
    /// Reported in the timeout message.
    pub timeout_s: f64,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        Self {
            max_body_chars: 4000,
            low_coverage_threshold: 5,
            timeout_s: crate::runner::DEFAULT_TIMEOUT_S,
        }
    }
}

/// Bindings of one state that differ from the previous state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDelta {
    pub index: usize,
    pub action: String,
    pub changed: Vec<(String, String)>,
}

impl fmt::Display for StateDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "  {}. {}: ", self.index, self.action)?;
        if self.changed.is_empty() {
            return f.write_str("(no variable changed)");
        }
        for (i, (name, value)) in self.changed.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name} = {value}")?;
        }
        Ok(())
    }
}

/// State 1 in full, then only the bindings whose text changed.
pub fn render_changed_bindings(trace: &CounterexampleTrace) -> Vec<StateDelta> {
    let mut deltas = Vec::with_capacity(trace.states.len());
    let mut previous: Option<&crate::trace::Bindings> = None;
    for state in &trace.states {
        let changed = state
            .bindings
            .iter()
            .filter(|(name, value)| previous.and_then(|p| p.get(*name)) != Some(*value))
            .map(|(n, v)| (n.clone(), v.clone()))
            .collect();
        deltas.push(StateDelta {
            index: state.index,
            action: state.action.clone(),
            changed,
        });
        previous = Some(&state.bindings);
    }
    deltas
}

fn trace_section(deltas: &[StateDelta], omitted: &std::ops::Range<usize>) -> String {
    let mut lines = Vec::new();
    for (i, d) in deltas.iter().enumerate() {
        if omitted.contains(&i) {
            if i == omitted.start {
                lines.push(format!("  ... {} states omitted ...", omitted.len()));
            }
            continue;
        }
        lines.push(d.to_string());
    }
    lines.join("\n")
}

#[derive(Debug, Clone, Default)]
pub struct FeedbackSynth {
    pub templates: FeedbackTemplates,
    pub options: FeedbackOptions,
}

impl FeedbackSynth {
    pub fn new(templates: FeedbackTemplates, options: FeedbackOptions) -> Self {
        Self { templates, options }
    }

    pub fn synthesize(&self, verdict: &TlcVerdict) -> FeedbackMessage {
        let explored = verdict
            .states_explored
            .map(|n| n.to_string())
            .unwrap_or_else(|| "an unknown number of".into());
        match verdict.class {
            VerdictClass::Violation => match &verdict.trace {
                Some(trace) => self.violation(trace),
                None => self.message(
                    VerdictClass::Violation,
                    Directive::ConfirmFinding,
                    "TLC reported an invariant violation without a trace.".into(),
                ),
            },
            VerdictClass::CompileError => {
                let excerpt = verdict
                    .diagnostic
                    .as_ref()
                    .map(|d| d.message_excerpt.clone())
                    .unwrap_or_default();
                let body = render_template(
                    &self.templates.compile_error,
                    &HashMap::from([("excerpt", excerpt)]),
                );
                self.message(VerdictClass::CompileError, Directive::FixSyntax, body)
            }
            VerdictClass::Safe => {
                let low = verdict
                    .states_explored
                    .is_some_and(|n| n < self.options.low_coverage_threshold);
                let (template, directive) = if low {
                    (&self.templates.safe_low_coverage, Directive::EscalateBounds)
                } else {
                    (&self.templates.safe, Directive::Remodel)
                };
                let body = render_template(template, &HashMap::from([("states_explored", explored)]));
                self.message(VerdictClass::Safe, directive, body)
            }
            VerdictClass::Timeout => {
                let body = render_template(
                    &self.templates.timeout,
                    &HashMap::from([("timeout_s", format!("{}", self.options.timeout_s))]),
                );
                self.message(VerdictClass::Timeout, Directive::ShrinkBounds, body)
            }
        }
    }

    pub fn extraction_failure(&self, error: &ExtractionError) -> FeedbackMessage {
        FeedbackMessage {
            verdict_class: None,
            directive: Directive::FixSyntax,
            alternative: None,
            body: render_template(
                &self.templates.extraction_error,
                &HashMap::from([("error", error.to_string())]),
            ),
        }
    }

    pub fn lint_failure(&self, report: &LintReport) -> FeedbackMessage {
        let findings = report
            .findings
            .iter()
            .map(|f| {
                if f.excerpt.is_empty() {
                    format!("- {} {}: {}", f.severity, f.rule_id, f.message)
                } else {
                    format!("- {} {}: {} (`{}`)", f.severity, f.rule_id, f.message, f.excerpt)
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        FeedbackMessage {
            verdict_class: None,
            directive: Directive::FixSyntax,
            alternative: None,
            body: render_template(&self.templates.lint_error, &HashMap::from([("findings", findings)])),
        }
    }

    fn message(&self, class: VerdictClass, directive: Directive, body: String) -> FeedbackMessage {
        FeedbackMessage {
            verdict_class: Some(class),
            directive,
            alternative: None,
            body,
        }
    }

    fn violation(&self, trace: &CounterexampleTrace) -> FeedbackMessage {
        let deltas = render_changed_bindings(trace);
        let last_action = trace
            .states
            .iter()
            .rev()
            .map(|s| s.action.as_str())
            .next()
            .unwrap_or("the last action")
            .to_string();
        let mut slots = HashMap::from([
            (
                "invariant",
                trace
                    .violated_invariant
                    .clone()
                    .unwrap_or_else(|| "an invariant".into()),
            ),
            ("depth", trace.depth().to_string()),
            ("transitions", trace.depth().saturating_sub(1).to_string()),
            ("actions", trace.actions().join(" -> ")),
            ("last_action", last_action),
            (
                "states_explored",
                trace
                    .states_explored
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| "unknown".into()),
            ),
        ]);

        // Drop interior states from the middle outwards until the body fits.
        // The first and last states are never dropped.
        let interior = deltas.len().saturating_sub(2);
        let mut dropped = 0;
        let body = loop {
            let start = 1 + (interior - dropped) / 2;
            slots.insert("trace", trace_section(&deltas, &(start..start + dropped)));
            let body = render_template(&self.templates.violation, &slots);
            if body.chars().count() <= self.options.max_body_chars || dropped == interior {
                break body;
            }
            dropped += 1;
        };
        FeedbackMessage {
            verdict_class: Some(VerdictClass::Violation),
            directive: Directive::ConfirmFinding,
            alternative: Some(Directive::TightenGuard),
            body,
        }
    }
}

/// Feedback for `verdict` with the built-in templates and default options.
pub fn synthesize_feedback(verdict: &TlcVerdict) -> FeedbackMessage {
    FeedbackSynth::default().synthesize(verdict)
}
