//! End-to-end loop runs driven by replay scripts and recorded TLC output.

mod common;

use common::{description, fixture};
use tlaloop_core::checker::{ModelChecker, RecordedChecker};
use tlaloop_core::feedback::Directive;
use tlaloop_core::gateway::{ReplayBackend, ReplayScript, Role};
use tlaloop_core::repl::{run_loop, LoopConfig, RunRecord, Terminal};
use tlaloop_core::runner::VerdictClass;

fn replay(script: &str, target: &str, config: &LoopConfig) -> (RunRecord, usize) {
    let script = ReplayScript::load(&fixture(script)).unwrap();
    let mut backend = ReplayBackend::new(script.replies());
    let mut checker = RecordedChecker::from_script(&script);
    let record = run_loop(target, &description(target), config, &mut backend, &mut checker);
    (record, checker.invocations())
}

#[test]
fn t3_recovers_from_a_compile_error() {
    let (r, calls) = replay("t3_compile_recovery", "t3", &LoopConfig::default());
    assert_eq!(r.terminal, Terminal::BugFound);
    assert_eq!(r.metrics.iterations, 2);
    assert_eq!(calls, 2);

    let first = &r.iterations[0];
    let verdict = first.verdict.as_ref().unwrap();
    assert_eq!(verdict.class, VerdictClass::CompileError);
    let excerpt = &verdict.diagnostic.as_ref().unwrap().message_excerpt;
    assert!(excerpt.contains("***Parse Error***"));
    let feedback = first.feedback.as_ref().unwrap();
    assert_eq!(feedback.directive, Directive::FixSyntax);
    assert!(feedback.body.contains(excerpt.as_str()), "excerpt not verbatim in feedback");

    // The feedback went back to the generator as the next user turn.
    let turns = r.conversation.turns();
    assert_eq!(turns.len(), 5);
    assert_eq!(turns[3].role, Role::User);
    assert_eq!(turns[3].content, feedback.body);

    let trace = r.counterexample.as_ref().unwrap();
    assert_eq!(trace.depth(), 3);
    assert_eq!(trace.actions()[1..], ["ActivateZeroRoot", "ExploitProcessWithoutProof"]);
    assert_eq!(r.final_artifact.as_ref().unwrap().iteration, 2);
}

#[test]
fn t2_is_found_on_the_first_shot() {
    let (r, calls) = replay("t2_first_shot", "t2", &LoopConfig::default());
    assert_eq!(r.terminal, Terminal::BugFound);
    assert_eq!(r.metrics.iterations, 1);
    assert_eq!(r.metrics.trace_depth, Some(4));
    assert_eq!(calls, 1);
    let fb = r.iterations[0].feedback.as_ref().unwrap();
    assert_eq!(fb.directive, Directive::ConfirmFinding);
    assert_eq!(fb.alternative, Some(Directive::TightenGuard));
}

#[test]
fn replies_without_code_exhaust_the_budget() {
    let config = LoopConfig {
        max_iterations: 2,
        ..LoopConfig::default()
    };
    let (r, calls) = replay("no_fences", "t2", &config);
    assert_eq!(r.terminal, Terminal::BudgetExhausted);
    assert_eq!(calls, 0);
    assert_eq!(r.metrics.tlc_invocations, 0);
    assert!(r.iterations.iter().all(|i| i.extraction_error.is_some()));
    assert!(r.final_artifact.is_none());
}

#[test]
fn running_out_of_replies_aborts() {
    let (r, _) = replay("no_fences", "t2", &LoopConfig::default());
    assert!(matches!(r.terminal, Terminal::Aborted { ref reason } if reason.contains("exhausted")));
    assert_eq!(r.iterations.len(), 2);
}

fn without_timings(mut r: RunRecord) -> RunRecord {
    r.metrics.t_gen_total_s = 0.0;
    r.metrics.t_tlc_total_s = 0.0;
    r.metrics.wall_s = 0.0;
    for i in &mut r.iterations {
        i.t_gen_s = 0.0;
    }
    r
}

#[test]
fn replays_are_deterministic() {
    let (a, _) = replay("t3_compile_recovery", "t3", &LoopConfig::default());
    let (b, _) = replay("t3_compile_recovery", "t3", &LoopConfig::default());
    assert_eq!(without_timings(a).to_json(), without_timings(b).to_json());
}

const UNBOUNDED_REPLY: &str = "```tla\n---- MODULE M ----\nEXTENDS Naturals\nVARIABLES x\nTypeOK == x \\in Nat\nInit == x = 0\nNext == x' = x + 1\nSafetyInvariant == x < 5\n====\n```\n```cfg\nINIT Init\nNEXT Next\nINVARIANT SafetyInvariant\n```\n";

#[test]
fn lint_errors_skip_the_checker() {
    let mut backend = ReplayBackend::new(vec![UNBOUNDED_REPLY.to_string(); 2]);
    let mut checker = RecordedChecker::default();
    let config = LoopConfig {
        max_iterations: 2,
        ..LoopConfig::default()
    };
    let r = run_loop("m", "A counter.", &config, &mut backend, &mut checker);
    assert_eq!(checker.invocations(), 0);
    assert_eq!(r.terminal, Terminal::BudgetExhausted);
    let fb = r.iterations[0].feedback.as_ref().unwrap();
    assert!(fb.body.contains("UNBOUNDED_SET"), "{}", fb.body);

    let mut backend = ReplayBackend::new(vec![UNBOUNDED_REPLY.to_string()]);
    let config = LoopConfig {
        lint_blocking: false,
        ..config
    };
    let r = run_loop("m", "A counter.", &config, &mut backend, &mut checker);
    assert_eq!(checker.invocations(), 1);
    assert!(matches!(r.terminal, Terminal::Aborted { .. }));
}
