//! Subcommand implementations. Each returns the process exit code; an
//! `Err` is reported as a usage error.

pub mod oracle;
pub mod parse;
pub mod verify;
