//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;
use tlaloop_core::artifact::SpecArtifact;
use tlaloop_core::runner::{RawTlcOutput, RunnerConfig, TOOLS_JAR_ENV};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixture(rel: &str) -> PathBuf {
    repo_root().join("fixtures").join(rel)
}

pub fn corpus(rel: &str) -> PathBuf {
    repo_root().join("corpus").join(rel)
}

pub fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A bundled target's reference module and config.
pub fn corpus_artifact(name: &str) -> SpecArtifact {
    SpecArtifact::from_files(&corpus(&format!("{name}.tla")), &corpus(&format!("{name}.cfg")), 0).unwrap()
}

pub fn description(target: &str) -> String {
    read(&corpus(&format!("{target}.md")))
}

#[derive(Debug, Deserialize)]
pub struct Sidecar {
    pub exit_code: i32,
    pub expected: Expected,
}

#[derive(Debug, Default, Deserialize)]
pub struct Expected {
    pub class: String,
    pub depth: Option<usize>,
    pub violated_invariant: Option<String>,
    pub actions: Option<Vec<String>>,
    pub states_explored: Option<u64>,
    #[serde(default)]
    pub excerpt_contains: Vec<String>,
}

/// Recorded TLC output `fixtures/tlc/<name>.out` with its sidecar.
pub fn tlc_fixture(name: &str) -> (RawTlcOutput, Sidecar) {
    let dir = fixture("tlc");
    let sidecar: Sidecar = toml::from_str(&read(&dir.join(format!("{name}.verdict.toml")))).unwrap();
    // Decoded the way the runner decodes a live process's output.
    let bytes = fs::read(dir.join(format!("{name}.out"))).unwrap();
    let out = RawTlcOutput::recorded(sidecar.exit_code, String::from_utf8_lossy(&bytes));
    (out, sidecar)
}

/// Names of all recorded TLC outputs that have a sidecar.
pub fn tlc_fixture_names() -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(fixture("tlc"))
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.strip_suffix(".verdict.toml").map(str::to_string)
        })
        .collect();
    names.sort();
    names
}

/// Runner configuration for a live TLC, or `None` when Java or the tools
/// archive are unavailable.
pub fn live_tlc() -> Option<RunnerConfig> {
    let config = RunnerConfig::default();
    let jar = env::var_os(TOOLS_JAR_ENV).map(PathBuf::from)?;
    if !jar.is_file() {
        return None;
    }
    let java_ok = Command::new(&config.java)
        .arg("-version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    java_ok.then_some(RunnerConfig {
        tools_jar: Some(jar),
        ..config
    })
}

/// Breaks every binding line longer than `width` at spaces, indenting the
/// continuation lines the way TLC's pretty-printer does.
pub fn wrap_bindings(text: &str, width: usize) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if !line.starts_with("/\\ ") || line.len() <= width {
            out.push_str(line);
            out.push('\n');
            continue;
        }
        // Never break between `/\ name =` and the value's first token.
        let mut words = line.split(' ');
        let mut current = words.by_ref().take(4).collect::<Vec<_>>().join(" ");
        for word in words {
            if current.len() + 1 + word.len() > width {
                out.push_str(&current);
                out.push('\n');
                current = format!("      {word}");
            } else {
                current.push(' ');
                current.push_str(word);
            }
        }
        out.push_str(&current);
        out.push('\n');
    }
    out
}
