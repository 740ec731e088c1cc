//! Turning raw TLC output into a verdict.
//!
//! Classification comes from the exit code. For violations the output is cut
//! into `State N:` blocks, each block's `/\ var = value` lines become
//! bindings, and the header's `<Action ...>` annotation names the action that
//! produced the state. Values are kept as the text TLC printed.

use std::fmt::Write as _;
use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runner::{ExitCodeMap, RawTlcOutput, VerdictClass};

/// Action label used for the initial state.
pub const INITIAL_ACTION: &str = "INITIAL";

static STATE_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^State\s+(\d+):\s*(.*?)\s*$").unwrap());
static CONJUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*/\\\s+([A-Za-z_][A-Za-z0-9_]*)\s+=\s?(.*)$").unwrap());
static BARE_BINDING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*)\s+=\s?(.*)$").unwrap());
static ACTION_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z_][A-Za-z0-9_!]*)").unwrap());
static STATES_SUMMARY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^(\d+) states? generated, (\d+) distinct states? found").unwrap()
});
static INVARIANT_VIOLATED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^Error: Invariant (\S+) is violated").unwrap());

/// Line prefixes that open a TLC error report.
const ERROR_MARKERS: &[&str] = &[
    "***Parse Error***",
    "Lexical error",
    "Semantic errors:",
    "*** Errors:",
    "Fatal errors",
    "Error:",
];

pub type Bindings = IndexMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceState {
    /// 1-based state number as printed by TLC.
    pub index: usize,
    pub action: String,
    pub bindings: Bindings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleTrace {
    pub states: Vec<TraceState>,
    pub violated_invariant: Option<String>,
    pub states_explored: Option<u64>,
}

impl CounterexampleTrace {
    /// Number of states, counting the initial one.
    pub fn depth(&self) -> usize {
        self.states.len()
    }

    pub fn actions(&self) -> Vec<&str> {
        self.states.iter().map(|s| s.action.as_str()).collect()
    }

    /// Renders the trace the way TLC prints it, so parsed and oracle traces
    /// can be compared with a plain diff.
    pub fn to_tlc_text(&self) -> String {
        let mut out = String::new();
        if let Some(inv) = &self.violated_invariant {
            let _ = writeln!(out, "Error: Invariant {inv} is violated.");
            let _ = writeln!(out, "Error: The behavior up to this point is:");
        }
        for state in &self.states {
            if state.action == INITIAL_ACTION {
                let _ = writeln!(out, "State {}: <Initial predicate>", state.index);
            } else {
                let _ = writeln!(out, "State {}: <{}>", state.index, state.action);
            }
            for (name, value) in &state.bindings {
                let _ = writeln!(out, "/\\ {name} = {value}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileDiagnostic {
    /// The error-bearing lines, a contiguous slice of `full_output`.
    pub message_excerpt: String,
    pub full_output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlcVerdict {
    pub class: VerdictClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<CounterexampleTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<CompileDiagnostic>,
    /// Distinct states from TLC's summary line, when printed.
    pub states_explored: Option<u64>,
    pub raw: RawTlcOutput,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("state block {index} has a header but no `/\\ var = value` lines")]
    MalformedBlock { index: usize },
    #[error("TLC output is incoherent with its exit code: {0}")]
    ParseIncoherent(String),
}

/// One `State N:` block: its header line and the lines under it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateBlock {
    pub index: usize,
    pub header: String,
    pub body: String,
}

fn ends_block(line: &str) -> bool {
    line.trim().is_empty()
        || line.starts_with("Error:")
        || STATES_SUMMARY.is_match(line)
        || line.starts_with("Back to state")
}

/// Splits TLC output on `State N:` headers. A block runs until the next
/// header or the end of the trace (a blank line or TLC's summary).
pub fn segment_states(stdout_text: &str) -> Vec<StateBlock> {
    let mut blocks: Vec<StateBlock> = Vec::new();
    let mut open = false;
    for line in stdout_text.lines() {
        if let Some(caps) = STATE_HEADER.captures(line) {
            blocks.push(StateBlock {
                index: caps[1].parse().unwrap_or(0),
                header: line.to_string(),
                body: String::new(),
            });
            open = true;
        } else if open {
            if ends_block(line) {
                open = false;
            } else if let Some(block) = blocks.last_mut() {
                block.body.push_str(line);
                block.body.push('\n');
            }
        }
    }
    blocks.sort_by_key(|b| b.index);
    blocks
}

fn action_from_header(header: &str) -> String {
    let rest = STATE_HEADER
        .captures(header)
        .map(|c| c[2].to_string())
        .unwrap_or_default();
    let inner = rest
        .strip_prefix('<')
        .and_then(|r| r.strip_suffix('>'))
        .unwrap_or(&rest)
        .trim();
    if inner.starts_with("Initial predicate") {
        return INITIAL_ACTION.to_string();
    }
    ACTION_NAME
        .captures(inner)
        .map(|c| c[1].to_string())
        .unwrap_or_else(|| "UNKNOWN".to_string())
}

/// Action name and variable bindings of one state block.
pub fn parse_bindings(block: &StateBlock) -> Result<(String, Bindings), TraceError> {
    let action = action_from_header(&block.header);
    let mut bindings = Bindings::new();
    let mut last: Option<String> = None;
    let lines: Vec<&str> = block.body.lines().collect();
    let has_conjuncts = lines.iter().any(|l| CONJUNCT.is_match(l));

    for line in lines {
        let caps = if has_conjuncts {
            CONJUNCT.captures(line)
        } else {
            // A single-variable spec prints `x = v` without the bullet.
            BARE_BINDING.captures(line)
        };
        if let Some(c) = caps {
            let name = c[1].to_string();
            bindings.insert(name.clone(), c[2].trim_end().to_string());
            last = Some(name);
        } else if let Some(value) = last.as_ref().and_then(|n| bindings.get_mut(n)) {
            // Wrapped value: continuation lines are joined with a space.
            let piece = line.trim();
            if !piece.is_empty() {
                value.push(' ');
                value.push_str(piece);
            }
        }
    }
    if bindings.is_empty() {
        return Err(TraceError::MalformedBlock { index: block.index });
    }
    Ok((action, bindings))
}

/// Lines from the first error marker up to the end of that report: the next
/// `Starting...`/`Finished in` progress line, the state-count summary, or EOF.
fn diagnostic_excerpt(full: &str) -> String {
    let mut start = None;
    let mut offset = 0;
    let mut end = full.len();
    for line in full.split_inclusive('\n') {
        let bare = line.trim_end_matches(['\n', '\r']);
        match start {
            None => {
                if ERROR_MARKERS.iter().any(|m| bare.trim_start().starts_with(m)) {
                    start = Some(offset);
                }
            }
            Some(_) => {
                if bare.starts_with("Starting...")
                    || bare.starts_with("Finished in")
                    || STATES_SUMMARY.is_match(bare)
                {
                    end = offset;
                    break;
                }
            }
        }
        offset += line.len();
    }
    let slice = match start {
        Some(s) => &full[s..end],
        None => {
            // No recognizable marker: fall back to the last 20 lines.
            let lines: Vec<&str> = full.split_inclusive('\n').collect();
            let tail = lines.len().saturating_sub(20);
            let skip: usize = lines[..tail].iter().map(|l| l.len()).sum();
            &full[skip..]
        }
    };
    slice.trim_end().to_string()
}

fn states_explored(text: &str) -> Option<u64> {
    STATES_SUMMARY
        .captures_iter(text)
        .last()
        .and_then(|c| c[2].parse().ok())
}

/// Parses a counterexample out of violation output.
pub fn parse_trace(stdout_text: &str) -> Result<CounterexampleTrace, TraceError> {
    let blocks = segment_states(stdout_text);
    if blocks.is_empty() {
        return Err(TraceError::ParseIncoherent(
            "violation exit code but no `State N:` blocks in the output".into(),
        ));
    }
    let mut states = Vec::with_capacity(blocks.len());
    for (pos, block) in blocks.iter().enumerate() {
        if block.index != pos + 1 {
            return Err(TraceError::ParseIncoherent(format!(
                "state numbers are not consecutive: expected {}, found {}",
                pos + 1,
                block.index
            )));
        }
        let (action, bindings) = parse_bindings(block)?;
        states.push(TraceState {
            index: block.index,
            action,
            bindings,
        });
    }
    Ok(CounterexampleTrace {
        states,
        violated_invariant: INVARIANT_VIOLATED
            .captures(stdout_text)
            .map(|c| c[1].to_string()),
        states_explored: states_explored(stdout_text),
    })
}

/// Classifies with the default exit-code table and extracts the payload.
pub fn parse_verdict(raw: &RawTlcOutput) -> Result<TlcVerdict, TraceError> {
    parse_verdict_with(raw, &ExitCodeMap::default())
}

pub fn parse_verdict_with(raw: &RawTlcOutput, codes: &ExitCodeMap) -> Result<TlcVerdict, TraceError> {
    let class = codes.classify(raw.exit_code, raw.timed_out);
    let mut verdict = TlcVerdict {
        class,
        trace: None,
        diagnostic: None,
        states_explored: states_explored(&raw.stdout_text),
        raw: raw.clone(),
    };
    match class {
        VerdictClass::Violation => verdict.trace = Some(parse_trace(&raw.stdout_text)?),
        VerdictClass::CompileError => {
            let full_output = raw.combined_text();
            verdict.diagnostic = Some(CompileDiagnostic {
                message_excerpt: diagnostic_excerpt(&full_output),
                full_output,
            });
        }
        VerdictClass::Safe | VerdictClass::Timeout => {}
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_STATES: &str = "\
Error: Invariant SafetyInvariant is violated.
Error: The behavior up to this point is:
State 1: <Initial predicate>
/\\ locked = 0
/\\ minted = 0

State 2: <Lock line 10, col 5 to line 12, col 20 of module Bridge>
/\\ locked = 1
/\\ minted = 0

State 3: <RelayMint line 14, col 5 to line 16, col 20 of module Bridge>
/\\ locked = 1
/\\ minted = 2

5 states generated, 4 distinct states found, 1 states left on queue.
";

    fn raw(code: i32, text: &str) -> RawTlcOutput {
        RawTlcOutput::recorded(code, text)
    }

    #[test]
    fn segments_in_order() {
        let blocks = segment_states(THREE_STATES);
        assert_eq!(blocks.iter().map(|b| b.index).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(blocks[2].body.ends_with("/\\ minted = 2\n"));
        assert!(!blocks[2].body.contains("states generated"));
    }

    #[test]
    fn safe_output_has_no_blocks() {
        assert!(segment_states("Model checking completed. No error has been found.\n").is_empty());
    }

    #[test]
    fn bindings_and_action() {
        let blocks = segment_states(THREE_STATES);
        let (action, b) = parse_bindings(&blocks[0]).unwrap();
        assert_eq!(action, INITIAL_ACTION);
        assert_eq!(b.get("locked").map(String::as_str), Some("0"));
        let (action, b) = parse_bindings(&blocks[1]).unwrap();
        assert_eq!(action, "Lock");
        assert_eq!(b.get("locked").map(String::as_str), Some("1"));
        assert_eq!(b.get("minted").map(String::as_str), Some("0"));
    }

    #[test]
    fn wrapped_value_is_joined() {
        let block = StateBlock {
            index: 2,
            header: "State 2: <Next line 3, col 1 to line 3, col 9 of module M>".into(),
            body: "/\\ relayers = {\"relayer_alpha\", \"relayer_bravo\",\n      \"relayer_charlie\"}\n/\\ count = 3\n"
                .into(),
        };
        let (action, b) = parse_bindings(&block).unwrap();
        assert_eq!(action, "Next");
        assert_eq!(b.len(), 2);
        assert_eq!(
            b["relayers"],
            "{\"relayer_alpha\", \"relayer_bravo\", \"relayer_charlie\"}"
        );
    }

    #[test]
    fn header_without_conjuncts_is_malformed() {
        let block = StateBlock {
            index: 4,
            header: "State 4: <Lock>".into(),
            body: String::new(),
        };
        assert_eq!(
            parse_bindings(&block),
            Err(TraceError::MalformedBlock { index: 4 })
        );
    }

    #[test]
    fn single_variable_spec_prints_bare_binding() {
        let text = "State 1: <Initial predicate>\nx = 0\n\nState 2: <Inc line 1, col 1 to line 1, col 2 of module M>\nx = 1\n\n";
        let trace = parse_trace(text).unwrap();
        assert_eq!(trace.states[1].bindings["x"], "1");
        assert_eq!(trace.actions(), vec!["INITIAL", "Inc"]);
    }

    #[test]
    fn parameterized_action_label() {
        let text = "State 1: <Initial predicate>\n/\\ x = 0\n\nState 2: <Reorg(1) line 4, col 3 to line 5, col 9 of module M>\n/\\ x = 1\n";
        assert_eq!(parse_trace(text).unwrap().actions(), vec!["INITIAL", "Reorg"]);
    }

    #[test]
    fn violation_verdict() {
        let v = parse_verdict(&raw(12, THREE_STATES)).unwrap();
        assert_eq!(v.class, VerdictClass::Violation);
        let t = v.trace.unwrap();
        assert_eq!(t.depth(), 3);
        assert_eq!(t.violated_invariant.as_deref(), Some("SafetyInvariant"));
        assert_eq!(t.states_explored, Some(4));
        assert_eq!(v.states_explored, Some(4));
        assert!(v.diagnostic.is_none());
    }

    #[test]
    fn violation_without_blocks_is_incoherent() {
        assert!(matches!(
            parse_verdict(&raw(12, "garbage")),
            Err(TraceError::ParseIncoherent(_))
        ));
    }

    #[test]
    fn gap_in_state_numbers_is_incoherent() {
        let text = THREE_STATES.replace("State 2:", "State 5:");
        assert!(matches!(
            parse_trace(&text),
            Err(TraceError::ParseIncoherent(_))
        ));
    }

    #[test]
    fn safe_verdict_has_no_payload() {
        let v = parse_verdict(&raw(0, "46 states generated, 26 distinct states found, 0 states left on queue.\n")).unwrap();
        assert_eq!(v.class, VerdictClass::Safe);
        assert!(v.trace.is_none() && v.diagnostic.is_none());
        assert_eq!(v.states_explored, Some(26));
    }

    #[test]
    fn compile_error_excerpt_spans_the_report() {
        let text = "Parsing file /tmp/M.tla\n***Parse Error***\nEncountered \"x\" at line 3, column 5\n\nResidual stack trace follows:\nExpression starting at line 3, column 1.\n\nStarting... (2026)\nError: Parsing or semantic analysis failed.\n";
        let v = parse_verdict(&raw(150, text)).unwrap();
        let d = v.diagnostic.unwrap();
        assert!(d.message_excerpt.starts_with("***Parse Error***"));
        assert!(d.message_excerpt.ends_with("Expression starting at line 3, column 1."));
        assert!(d.full_output.contains(&d.message_excerpt));
    }

    #[test]
    fn compile_error_without_marker_keeps_the_tail() {
        let v = parse_verdict(&raw(255, "java.lang.OutOfMemoryError\n")).unwrap();
        assert_eq!(v.class, VerdictClass::CompileError);
        assert_eq!(v.diagnostic.unwrap().message_excerpt, "java.lang.OutOfMemoryError");
    }

    #[test]
    fn stderr_rides_along_in_diagnostics() {
        let mut r = raw(1, "");
        r.stderr_text = "Error: Could not find or load main class tlc2.TLC\n".into();
        let d = parse_verdict(&r).unwrap().diagnostic.unwrap();
        assert!(d.message_excerpt.contains("Could not find"));
    }

    #[test]
    fn tlc_text_rendering_parses_back() {
        let trace = parse_trace(THREE_STATES).unwrap();
        let again = parse_trace(&trace.to_tlc_text()).unwrap();
        assert_eq!(again.states, trace.states);
        assert_eq!(again.violated_invariant, trace.violated_invariant);
    }
}
