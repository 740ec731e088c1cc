//! Parser checks against byte-exact TLC 2.15 output.

mod common;

use std::time::Instant;

use common::{tlc_fixture, tlc_fixture_names, wrap_bindings};
use tlaloop_core::runner::{classify_exit, RawTlcOutput, VerdictClass};
use tlaloop_core::trace::{parse_trace, parse_verdict, TraceError, INITIAL_ACTION};

#[test]
fn every_fixture_matches_its_sidecar() {
    let names = tlc_fixture_names();
    assert!(names.len() >= 9, "fixtures missing: {names:?}");
    for name in names {
        let (raw, sidecar) = tlc_fixture(&name);
        let want = &sidecar.expected;
        let verdict = parse_verdict(&raw).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(verdict.class.to_string(), want.class, "{name}: class");
        if let Some(n) = want.states_explored {
            assert_eq!(verdict.states_explored, Some(n), "{name}: states_explored");
        }
        if let Some(depth) = want.depth {
            let trace = verdict.trace.as_ref().unwrap();
            assert_eq!(trace.depth(), depth, "{name}: depth");
            assert_eq!(trace.violated_invariant, want.violated_invariant, "{name}: invariant");
        }
        if let Some(actions) = &want.actions {
            assert_eq!(&verdict.trace.as_ref().unwrap().actions(), actions, "{name}: actions");
        }
        if verdict.class == VerdictClass::CompileError {
            let excerpt = &verdict.diagnostic.as_ref().unwrap().message_excerpt;
            assert!(!excerpt.is_empty(), "{name}: empty excerpt");
            for needle in &want.excerpt_contains {
                assert!(excerpt.contains(needle.as_str()), "{name}: excerpt lacks {needle:?}:\n{excerpt}");
            }
        } else {
            assert!(verdict.diagnostic.is_none(), "{name}: unexpected diagnostic");
        }
    }
}

#[test]
fn t1_trace_is_coherent() {
    let started = Instant::now();
    let (raw, _) = tlc_fixture("t1_violation");
    let verdict = parse_verdict(&raw).unwrap();
    let trace = verdict.trace.unwrap();
    assert!(started.elapsed().as_secs_f64() < 1.0);

    assert_eq!(verdict.class, VerdictClass::Violation);
    assert_eq!(trace.depth(), 4);
    assert_eq!(trace.violated_invariant.as_deref(), Some("SafetyInvariant"));
    for (i, state) in trace.states.iter().enumerate() {
        assert_eq!(state.index, i + 1);
    }
    let mut keys: Vec<_> = trace.states[0].bindings.keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["locked", "minted", "queue", "status"]);
    for state in &trace.states {
        let mut k: Vec<_> = state.bindings.keys().cloned().collect();
        k.sort();
        assert_eq!(k, keys);
    }
    assert_eq!(trace.states[0].action, INITIAL_ACTION);
    assert_eq!(trace.states[3].bindings["minted"], "1");
    assert_eq!(trace.states[3].bindings["locked"], "0");
    assert_eq!(trace.states[2].bindings["status"], r#"<<"reverted", "none", "none">>"#);
}

#[test]
fn values_keep_tlc_spelling() {
    let (raw, _) = tlc_fixture("wrap_long_values");
    let trace = parse_verdict(&raw).unwrap().trace.unwrap();
    assert_eq!(trace.states[0].bindings["relayers"], "{}");
    assert_eq!(
        trace.states[3].bindings["relayers"],
        r#"{"relayer_alpha_primary", "relayer_bravo_secondary", "relayer_charlie_tertiary"}"#
    );
    assert!(trace.states[3].bindings["pending"].starts_with("[relayer_alpha_primary |-> [amount |-> 1,"));
}

#[test]
fn wrapped_values_are_rejoined() {
    let (raw, _) = tlc_fixture("wrap_long_values");
    let wrapped = wrap_bindings(&raw.stdout_text, 80);
    assert!(wrapped.lines().count() > raw.stdout_text.lines().count() + 4);
    assert_eq!(parse_trace(&wrapped).unwrap(), parse_trace(&raw.stdout_text).unwrap());
}

#[test]
fn exit_code_mapping() {
    let raw = |code: Option<i32>, timed_out: bool| RawTlcOutput {
        exit_code: code,
        stdout_text: String::new(),
        stderr_text: String::new(),
        duration_s: 0.0,
        timed_out,
    };
    assert_eq!(classify_exit(&raw(Some(0), false)), VerdictClass::Safe);
    assert_eq!(classify_exit(&raw(Some(12), false)), VerdictClass::Violation);
    assert_eq!(classify_exit(&raw(Some(255), false)), VerdictClass::CompileError);
    assert_eq!(classify_exit(&raw(Some(150), false)), VerdictClass::CompileError);
    assert_eq!(classify_exit(&raw(None, true)), VerdictClass::Timeout);
    assert_eq!(classify_exit(&raw(Some(12), true)), VerdictClass::Timeout);
}

#[test]
fn violation_without_coherent_states_is_an_error() {
    let (raw, _) = tlc_fixture("t1_violation");
    let gap = raw.stdout_text.replace("State 3:", "State 7:");
    let err = parse_verdict(&RawTlcOutput::recorded(12, gap)).unwrap_err();
    assert!(matches!(err, TraceError::ParseIncoherent(_)), "{err:?}");
}
