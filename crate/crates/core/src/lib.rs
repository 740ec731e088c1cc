//! Generate-check-feedback loop between a text generator and the TLC model
//! checker.
//!
//! A natural-language protocol description goes in; the generator writes a
//! bounded TLA+ module and configuration; TLC checks it; its output is parsed
//! into a structured verdict and turned into corrective feedback for the next
//! turn. The loop stops when TLC reports a counterexample, the iteration
//! budget runs out, or something unrecoverable happens.
//!
//! Modules, bottom-up:
//! - [`artifact`]: extracting and linting the module/config pair,
//! - [`runner`]: running TLC in an isolated workspace,
//! - [`trace`]: parsing TLC output into verdicts and counterexample traces,
//! - [`feedback`]: verdict-to-message synthesis,
//! - [`gateway`]: conversation state and generation backends,
//! - [`checker`]: model-checker strategies (live TLC, recorded output),
//! - [`repl`]: the iteration loop and run records,
//! - [`oracle`]: hand-coded reference models for the bundled targets.

pub mod artifact;
pub mod checker;
pub mod feedback;
pub mod gateway;
pub mod oracle;
pub mod registry;
pub mod repl;
pub mod runner;
pub mod trace;
