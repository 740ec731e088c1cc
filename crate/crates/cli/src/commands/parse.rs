//! `tlaloop parse`: recorded TLC output to verdict.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use tlaloop_core::runner::RawTlcOutput;
use tlaloop_core::trace::parse_verdict;

use crate::{exit, ParseArgs};

/// `exit_code` from the `<stem>.verdict.toml` next to `file`, if any.
fn sidecar_exit_code(file: &Path) -> Result<Option<i32>> {
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let sidecar = file.with_file_name(format!("{stem}.verdict.toml"));
    if !sidecar.is_file() {
        return Ok(None);
    }
    let table: toml::Table = toml::from_str(&fs::read_to_string(&sidecar)?)
        .with_context(|| format!("parsing {}", sidecar.display()))?;
    match table.get("exit_code") {
        None => Ok(None),
        Some(v) => match v.as_integer().and_then(|n| i32::try_from(n).ok()) {
            Some(code) => Ok(Some(code)),
            None => bail!("{}: exit_code must be an integer", sidecar.display()),
        },
    }
}

pub fn run(args: ParseArgs) -> Result<u8> {
    let bytes = fs::read(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let exit_code = match args.exit_code {
        Some(code) => code,
        None => match sidecar_exit_code(&args.file)? {
            Some(code) => code,
            None => bail!(
                "no exit code for {}: pass --exit-code or add a .verdict.toml sidecar",
                args.file.display()
            ),
        },
    };
    let raw = RawTlcOutput::recorded(exit_code, String::from_utf8_lossy(&bytes));
    let verdict = match parse_verdict(&raw) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit::ABORTED);
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&verdict)?);
        return Ok(0);
    }
    println!("class: {}", verdict.class);
    if let Some(n) = verdict.states_explored {
        println!("distinct states: {n}");
    }
    if let Some(trace) = &verdict.trace {
        if let Some(inv) = &trace.violated_invariant {
            println!("violated invariant: {inv}");
        }
        println!("depth: {}", trace.depth());
        println!("actions: {}", trace.actions().join(" -> "));
        println!();
        print!("{}", trace.to_tlc_text());
    }
    if let Some(d) = &verdict.diagnostic {
        println!("diagnostic:");
        println!("{}", d.message_excerpt);
    }
    Ok(0)
}
