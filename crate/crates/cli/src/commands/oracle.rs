//! `tlaloop oracle`: shortest counterexample of a built-in reference model.

use anyhow::{bail, Result};
use tlaloop_core::oracle::{oracle_registry, OracleOutcome, OracleParams, SearchLimits};

use crate::{exit, OracleArgs, Target};

pub fn run(args: OracleArgs) -> Result<u8> {
    let (name, bound) = match args.target {
        Target::T1 | Target::T2 if args.max_messages.is_some() => {
            bail!("--max-messages applies to t3; use --max-tokens")
        }
        Target::T3 if args.max_tokens.is_some() => bail!("--max-tokens applies to t1 and t2; use --max-messages"),
        Target::T1 => ("t1", args.max_tokens),
        Target::T2 => ("t2", args.max_tokens),
        Target::T3 => ("t3", args.max_messages),
    };
    let params = OracleParams {
        bound,
        variant: args.variant.clone(),
    };
    let model = oracle_registry().create(name, &params)?;
    let outcome = match model.explore(&SearchLimits {
        max_states: args.max_states,
    }) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{name}: {e}");
            return Ok(exit::ABORTED);
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&outcome)?);
    } else {
        match &outcome {
            OracleOutcome::Safe { distinct_states } => {
                println!("{name}: no violation ({distinct_states} distinct states)");
            }
            OracleOutcome::Violation(trace) => {
                println!(
                    "{name}: {} violated at depth {} ({} distinct states)",
                    trace.violated_invariant,
                    trace.depth(),
                    trace.distinct_states
                );
                println!("steps: {}", trace.labels().join(" -> "));
                println!();
                print!("{}", trace.to_counterexample().to_tlc_text());
            }
        }
    }
    Ok(match outcome {
        OracleOutcome::Violation(_) => exit::BUG_FOUND,
        OracleOutcome::Safe { .. } => exit::SAFE,
    })
}
