//! `tlaloop`: drive the generate-check-feedback loop from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Process exit codes.
pub mod exit {
    pub const BUG_FOUND: u8 = 0;
    pub const SAFE: u8 = 1;
    pub const BUDGET_EXHAUSTED: u8 = 2;
    pub const ABORTED: u8 = 3;
    pub const USAGE: u8 = 64;
}

#[derive(Debug, Parser)]
#[command(
    name = "tlaloop",
    version,
    about = "Turn protocol descriptions into TLA+ counterexamples with a generator and TLC",
    after_help = "Exit codes: 0 bug found, 1 safe, 2 iteration budget exhausted, 3 aborted, 64 usage error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the loop on one or more target descriptions, or check a
    /// hand-written specification with --ground-truth.
    Verify(VerifyArgs),
    /// Parse recorded TLC output into a verdict.
    Parse(ParseArgs),
    /// Search a built-in reference model for its shortest counterexample.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnSafeArg {
    Feedback,
    Terminate,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Target description files (Markdown or text); the file stem names the run.
    pub targets: Vec<PathBuf>,

    /// Generation backend: http (default) or replay.
    #[arg(long, env = "TLALOOP_BACKEND")]
    pub backend: Option<String>,

    /// Replay script (file or directory with script.toml); repeat once per target.
    #[arg(long)]
    pub fixture: Vec<PathBuf>,

    /// Model checker: tlc (default) or recorded (TLC output stored in the replay script).
    #[arg(long, env = "TLALOOP_CHECKER")]
    pub checker: Option<String>,

    /// Path to tla2tools.jar.
    #[arg(long, env = "TLA2TOOLS_JAR")]
    pub tlc_path: Option<PathBuf>,

    /// Maximum loop iterations per target.
    #[arg(long, env = "TLALOOP_MAX_ITERS")]
    pub max_iters: Option<u32>,

    /// Wall-clock limit for one TLC run, in seconds.
    #[arg(long, env = "TLALOOP_TIMEOUT_S")]
    pub timeout_s: Option<f64>,

    /// Directory for run records and final specifications.
    #[arg(long, default_value = "tlaloop-out")]
    pub out: PathBuf,

    /// Check a hand-written module directly (config defaults to the module's .cfg).
    #[arg(long, num_args = 1..=2, value_names = ["TLA", "CFG"])]
    pub ground_truth: Option<Vec<PathBuf>>,

    /// TOML configuration file.
    #[arg(long, env = "TLALOOP_CONFIG")]
    pub config: Option<PathBuf>,

    /// What a SAFE verdict before the last iteration does.
    #[arg(long, value_enum)]
    pub on_safe: Option<OnSafeArg>,

    /// Keep TLC workspaces instead of deleting them.
    #[arg(long)]
    pub keep_workspace: bool,

    /// Let TLC report deadlocks (off by default).
    #[arg(long)]
    pub check_deadlock: bool,

    /// Directory with feedback templates overriding the built-in ones.
    #[arg(long)]
    pub templates: Option<PathBuf>,

    /// File replacing the built-in system prompt.
    #[arg(long)]
    pub system_prompt: Option<PathBuf>,

    /// Chat-completion endpoint for the http backend.
    #[arg(long, env = "TLALOOP_ENDPOINT")]
    pub endpoint: Option<String>,

    /// Model name for the http backend.
    #[arg(long, env = "TLALOOP_MODEL")]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// File holding TLC's stdout.
    pub file: PathBuf,

    /// TLC exit code; defaults to `exit_code` in the `<stem>.verdict.toml` sidecar.
    #[arg(long)]
    pub exit_code: Option<i32>,

    /// Print the verdict as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    T1,
    T2,
    T3,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Reference model.
    #[arg(value_enum)]
    pub target: Target,

    /// Token bound for t1 and t2.
    #[arg(long)]
    pub max_tokens: Option<u32>,

    /// Message bound for t3.
    #[arg(long)]
    pub max_messages: Option<u32>,

    /// Model variant: no-reorg, finality-check (t1, t2) or no-zero-root (t3).
    #[arg(long)]
    pub variant: Option<String>,

    /// Give up after this many distinct states.
    #[arg(long, default_value_t = tlaloop_core::oracle::DEFAULT_MAX_STATES)]
    pub max_states: usize,

    /// Print the result as JSON.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { exit::USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Verify(args) => commands::verify::run(args),
        Command::Parse(args) => commands::parse::run(args),
        Command::Oracle(args) => commands::oracle::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::USAGE)
        }
    }
}
