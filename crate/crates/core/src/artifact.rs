//! The two generated artifacts (TLA+ module and TLC config), their
//! extraction from a generator reply, and a textual boundedness lint.
//!
//! Extraction looks at fenced code blocks only. A block tagged `tla` (or
//! `tla+`, `tlaplus`) is the module, a block tagged `cfg` is the config, and
//! an untagged block whose first non-blank line is a `---- MODULE Name ----`
//! header is also taken as the module. More than one block of a kind is an
//! error rather than a guess.
//!
//! The lint is a heuristic pass over the text. TLC remains the semantic
//! authority; the lint only catches unbounded state before it reaches TLC.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

static MODULE_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*-{4,}\s*MODULE\s+([A-Za-z0-9_]+)\s*-{4,}\s*$").unwrap());

/// A TLA+ module paired with its TLC configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecArtifact {
    pub module_name: String,
    pub module_text: String,
    pub config_text: String,
    /// Loop iteration that produced the artifact; 0 for hand-written input.
    pub iteration: u32,
}

impl SpecArtifact {
    pub fn module_file_name(&self) -> String {
        format!("{}.tla", self.module_name)
    }

    pub fn config_file_name(&self) -> String {
        format!("{}.cfg", self.module_name)
    }

    /// Writes `<Name>.tla` and `<Name>.cfg` into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        let tla = dir.join(self.module_file_name());
        let cfg = dir.join(self.config_file_name());
        fs::write(&tla, &self.module_text)?;
        fs::write(&cfg, &self.config_text)?;
        Ok((tla, cfg))
    }

    /// Reads `<module_name>.tla` and `<module_name>.cfg` back from `dir`.
    pub fn read_from(dir: &Path, module_name: &str, iteration: u32) -> io::Result<Self> {
        Ok(Self {
            module_name: module_name.to_string(),
            module_text: fs::read_to_string(dir.join(format!("{module_name}.tla")))?,
            config_text: fs::read_to_string(dir.join(format!("{module_name}.cfg")))?,
            iteration,
        })
    }

    /// Loads a hand-written module/config pair; the module name comes from
    /// the module header.
    pub fn from_files(tla: &Path, cfg: &Path, iteration: u32) -> Result<Self, LoadError> {
        let module_text = fs::read_to_string(tla).map_err(|source| LoadError::Io {
            path: tla.to_path_buf(),
            source,
        })?;
        let config_text = fs::read_to_string(cfg).map_err(|source| LoadError::Io {
            path: cfg.to_path_buf(),
            source,
        })?;
        let module_name = module_header_name(&module_text).ok_or(LoadError::NoModuleHeader)?;
        Ok(Self {
            module_name,
            module_text,
            config_text,
            iteration,
        })
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("module text has no `---- MODULE <Name> ----` header")]
    NoModuleHeader,
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionError {
    #[error("no TLA+ module block found (expected a ```tla fenced block)")]
    MissingModule,
    #[error("no TLC config block found (expected a ```cfg fenced block)")]
    MissingConfig,
    #[error("ambiguous reply: {modules} module blocks and {configs} config blocks, expected exactly one of each")]
    AmbiguousBlocks { modules: usize, configs: usize },
    #[error("module block has no `---- MODULE <Name> ----` header")]
    NoModuleHeader,
}

/// Name from the first `---- MODULE Name ----` line, if any.
pub fn module_header_name(module_text: &str) -> Option<String> {
    module_text
        .lines()
        .find_map(|line| MODULE_HEADER.captures(line).map(|c| c[1].to_string()))
}

struct FencedBlock {
    tag: String,
    text: String,
}

fn fenced_blocks(text: &str) -> Vec<FencedBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        match current.take() {
            None => {
                if let Some(rest) = trimmed.strip_prefix("```") {
                    let tag = rest
                        .split_whitespace()
                        .next()
                        .unwrap_or("")
                        .to_ascii_lowercase();
                    current = Some((tag, Vec::new()));
                }
            }
            Some((tag, mut lines)) => {
                if trimmed == "```" {
                    blocks.push(FencedBlock {
                        tag,
                        text: join_lines(&lines),
                    });
                } else {
                    lines.push(line);
                    current = Some((tag, lines));
                }
            }
        }
    }
    // An unterminated fence runs to the end of the reply.
    if let Some((tag, lines)) = current {
        blocks.push(FencedBlock {
            tag,
            text: join_lines(&lines),
        });
    }
    blocks
}

fn join_lines(lines: &[&str]) -> String {
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

fn is_module_tag(tag: &str) -> bool {
    matches!(tag, "tla" | "tla+" | "tlaplus")
}

fn starts_with_header(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| MODULE_HEADER.is_match(l))
}

/// Pulls the module and config out of a generator reply.
pub fn extract_artifacts(response_text: &str) -> Result<SpecArtifact, ExtractionError> {
    let mut modules = Vec::new();
    let mut configs = Vec::new();
    for block in fenced_blocks(response_text) {
        if is_module_tag(&block.tag) || (block.tag.is_empty() && starts_with_header(&block.text)) {
            modules.push(block.text);
        } else if block.tag == "cfg" {
            configs.push(block.text);
        }
    }
    if modules.len() > 1 || configs.len() > 1 {
        return Err(ExtractionError::AmbiguousBlocks {
            modules: modules.len(),
            configs: configs.len(),
        });
    }
    let module_text = modules.pop().ok_or(ExtractionError::MissingModule)?;
    let config_text = configs.pop().ok_or(ExtractionError::MissingConfig)?;
    let module_name = module_header_name(&module_text).ok_or(ExtractionError::NoModuleHeader)?;
    Ok(SpecArtifact {
        module_name,
        module_text,
        config_text,
        iteration: 0,
    })
}

// ---------------------------------------------------------------------------
// Lint

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Warn,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warn => "WARN",
            Severity::Error => "ERROR",
        })
    }
}

pub mod rule {
    pub const UNBOUNDED_SET: &str = "UNBOUNDED_SET";
    pub const UNDECLARED_CONSTANT: &str = "UNDECLARED_CONSTANT";
    pub const MISSING_SAFETY_INVARIANT: &str = "MISSING_SAFETY_INVARIANT";
    pub const MISSING_TYPE_OK: &str = "MISSING_TYPE_OK";
    pub const CONFIG_MISSING_BEHAVIOR: &str = "CONFIG_MISSING_BEHAVIOR";
    pub const CONFIG_MISSING_INVARIANT: &str = "CONFIG_MISSING_INVARIANT";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub rule_id: String,
    /// The offending source line, trimmed.
    pub excerpt: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub findings: Vec<Finding>,
    pub passed: bool,
}

impl LintReport {
    fn from_findings(findings: Vec<Finding>) -> Self {
        let passed = !findings.iter().any(|f| f.severity == Severity::Error);
        Self { findings, passed }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn has_rule(&self, rule_id: &str) -> bool {
        self.findings.iter().any(|f| f.rule_id == rule_id)
    }
}

static INFINITE_SET: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:\\in|\\subseteq|\\subset|->|SUBSET)\s*(Nat|Int|Real|STRING)\b").unwrap()
});
static SEQ_MEMBERSHIP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([A-Za-z_][A-Za-z0-9_]*)\s*\\in\s*Seq\s*\(").unwrap());
static CONSTANT_DECL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*CONSTANTS?\b(.*)$").unwrap());
static CFG_ASSIGNMENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([A-Za-z_][A-Za-z0-9_]*)\s*(?:<-|=)").unwrap());
static IDENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap());

fn strip_comment(line: &str) -> &str {
    match line.find("\\*") {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Lines of the top-level definition `name == ...`, including the header
/// line. The body ends at the next line that starts in column 0 with
/// something other than a conjunction/disjunction bullet or comment.
fn definition_lines<'a>(module_text: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let header = Regex::new(&format!(r"^\s*{}\s*(\([^)]*\))?\s*==", regex::escape(name))).unwrap();
    let mut lines = module_text.lines();
    let first = lines.by_ref().find(|l| header.is_match(l))?;
    let mut body = vec![first];
    for line in lines {
        let ends = line
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '=');
        if ends {
            break;
        }
        body.push(line);
    }
    Some(body)
}

fn declared_constants(module_text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut lines = module_text.lines().peekable();
    while let Some(line) = lines.next() {
        let code = strip_comment(line);
        let Some(caps) = CONSTANT_DECL.captures(code) else {
            continue;
        };
        let mut decl = caps[1].to_string();
        // Declarations continue onto the next line after a trailing comma,
        // or when the keyword stands alone.
        while decl.trim().is_empty() || decl.trim_end().ends_with(',') {
            match lines.peek() {
                Some(next) if !next.trim().is_empty() => {
                    decl.push(' ');
                    decl.push_str(strip_comment(next));
                    lines.next();
                }
                _ => break,
            }
        }
        for item in decl.split(',') {
            if let Some(ident) = IDENT.find(item) {
                out.push((ident.as_str().to_string(), line.trim().to_string()));
            }
        }
    }
    out
}

fn assigned_constants(config_text: &str) -> BTreeSet<String> {
    config_text
        .lines()
        .map(strip_comment)
        .flat_map(|l| CFG_ASSIGNMENT.captures_iter(l).map(|c| c[1].to_string()).collect::<Vec<_>>())
        .collect()
}

fn header_line(artifact: &SpecArtifact) -> String {
    artifact
        .module_text
        .lines()
        .find(|l| MODULE_HEADER.is_match(l))
        .unwrap_or_default()
        .trim()
        .to_string()
}

/// Textual boundedness checks over an extracted artifact.
pub fn lint_boundedness(artifact: &SpecArtifact) -> LintReport {
    let mut findings = Vec::new();
    let module = &artifact.module_text;

    for def in ["Init", "TypeOK"] {
        let Some(lines) = definition_lines(module, def) else {
            continue;
        };
        let code: Vec<&str> = lines.iter().map(|l| strip_comment(l)).collect();
        let joined = code.join("\n");
        for line in &code {
            if let Some(m) = INFINITE_SET.captures(line) {
                findings.push(Finding {
                    severity: Severity::Error,
                    rule_id: rule::UNBOUNDED_SET.into(),
                    excerpt: line.trim().to_string(),
                    message: format!(
                        "{def} ranges over the infinite set {}; use a 0..MaxN range bounded by a CONSTANT",
                        &m[1]
                    ),
                });
            }
            for caps in SEQ_MEMBERSHIP.captures_iter(line) {
                let var = &caps[1];
                let bound = Regex::new(&format!(
                    r"Len\s*\(\s*{}\s*\)\s*(<=|=<|\\leq|<|\\in)",
                    regex::escape(var)
                ))
                .unwrap();
                if !bound.is_match(&joined) {
                    findings.push(Finding {
                        severity: Severity::Error,
                        rule_id: rule::UNBOUNDED_SET.into(),
                        excerpt: line.trim().to_string(),
                        message: format!(
                            "{var} ranges over Seq(...) with no Len({var}) bound in {def}"
                        ),
                    });
                }
            }
        }
    }

    let assigned = assigned_constants(&artifact.config_text);
    for (name, decl_line) in declared_constants(module) {
        let uses = Regex::new(&format!(r"\b{}\b", regex::escape(&name)))
            .unwrap()
            .find_iter(module)
            .count();
        if uses > 1 && !assigned.contains(&name) {
            findings.push(Finding {
                severity: Severity::Error,
                rule_id: rule::UNDECLARED_CONSTANT.into(),
                excerpt: decl_line,
                message: format!(
                    "constant {name} is used in the module but has no value in the config's CONSTANTS section"
                ),
            });
        }
    }

    if definition_lines(module, "SafetyInvariant").is_none() {
        findings.push(Finding {
            severity: Severity::Error,
            rule_id: rule::MISSING_SAFETY_INVARIANT.into(),
            excerpt: header_line(artifact),
            message: "module does not define SafetyInvariant".into(),
        });
    }
    if definition_lines(module, "TypeOK").is_none() {
        findings.push(Finding {
            severity: Severity::Warn,
            rule_id: rule::MISSING_TYPE_OK.into(),
            excerpt: header_line(artifact),
            message: "module does not define TypeOK".into(),
        });
    }

    let cfg_words: BTreeSet<&str> = artifact
        .config_text
        .lines()
        .map(strip_comment)
        .flat_map(str::split_whitespace)
        .collect();
    let has = |w: &str| cfg_words.contains(w);
    if !(has("SPECIFICATION") || (has("INIT") && has("NEXT"))) {
        findings.push(Finding {
            severity: Severity::Error,
            rule_id: rule::CONFIG_MISSING_BEHAVIOR.into(),
            excerpt: String::new(),
            message: "config declares neither SPECIFICATION nor INIT/NEXT".into(),
        });
    }
    if !(has("INVARIANT") || has("INVARIANTS")) {
        findings.push(Finding {
            severity: Severity::Error,
            rule_id: rule::CONFIG_MISSING_INVARIANT.into(),
            excerpt: String::new(),
            message: "config declares no INVARIANT".into(),
        });
    }

    LintReport::from_findings(findings)
}
