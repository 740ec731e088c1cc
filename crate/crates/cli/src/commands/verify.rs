//! `tlaloop verify`: run the loop per target, or check a ground-truth spec.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use tlaloop_core::artifact::SpecArtifact;
use tlaloop_core::checker::{checker_registry, CheckerParams, ModelChecker};
use tlaloop_core::feedback::{FeedbackOptions, FeedbackTemplates};
use tlaloop_core::gateway::{backend_registry, BackendParams, GenerationBackend, SYSTEM_PROMPT};
use tlaloop_core::repl::{check_ground_truth, run_loop, GroundTruthOutcome, LoopConfig, OnSafe, Terminal};
use tlaloop_core::runner::{ExitCodeMap, RunnerConfig};

use crate::config::FileConfig;
use crate::{exit, OnSafeArg, VerifyArgs};

const DEFAULT_BACKEND: &str = "http";
const DEFAULT_CHECKER: &str = "tlc";

/// Everything `verify` needs, with precedence already applied.
struct Settings {
    backend: String,
    checker: String,
    backend_params: BackendParams,
    runner: RunnerConfig,
    loop_config: LoopConfig,
}

fn resolve(args: &VerifyArgs, file: FileConfig) -> Result<Settings> {
    let mut runner = RunnerConfig::default();
    let tlc = file.tlc;
    if let Some(v) = tlc.invocation {
        runner.tlc_invocation = v;
    }
    if let Some(v) = tlc.java {
        runner.java = v;
    }
    if let Some(v) = args.tlc_path.clone().or(tlc.tools_jar) {
        runner.tools_jar = Some(v);
    }
    if let Some(v) = args.timeout_s.or(tlc.timeout_s) {
        runner.timeout_s = v;
    }
    if let Some(v) = tlc.workspace_root {
        runner.workspace_root = v;
    }
    runner.keep_workspace = args.keep_workspace || tlc.keep_workspace.unwrap_or(false);
    runner.check_deadlock = args.check_deadlock || tlc.check_deadlock.unwrap_or(false);
    runner.exit_codes = ExitCodeMap {
        safe: tlc.safe_exit_codes.unwrap_or(runner.exit_codes.safe),
        violation: tlc.violation_exit_codes.unwrap_or(runner.exit_codes.violation),
    };
    runner.validate()?;

    let templates = match args.templates.clone().or(file.templates) {
        Some(dir) => FeedbackTemplates::load_dir(&dir)
            .with_context(|| format!("loading templates from {}", dir.display()))?,
        None => FeedbackTemplates::default(),
    };
    let system_prompt = match args.system_prompt.clone().or(file.system_prompt) {
        Some(path) => fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
        None => SYSTEM_PROMPT.to_string(),
    };
    let defaults = LoopConfig::default();
    let feedback_defaults = FeedbackOptions::default();
    let on_safe = match args.on_safe {
        Some(OnSafeArg::Feedback) => OnSafe::Feedback,
        Some(OnSafeArg::Terminate) => OnSafe::Terminate,
        None => file.loop_.on_safe.unwrap_or(defaults.on_safe),
    };
    let max_iterations = args.max_iters.or(file.loop_.max_iterations).unwrap_or(defaults.max_iterations);
    if max_iterations == 0 {
        bail!("--max-iters must be at least 1");
    }
    let loop_config = LoopConfig {
        max_iterations,
        on_safe,
        lint_blocking: file.loop_.lint_blocking.unwrap_or(defaults.lint_blocking),
        confirm_violation: file.loop_.confirm_violation.unwrap_or(defaults.confirm_violation),
        system_prompt,
        templates,
        feedback: FeedbackOptions {
            max_body_chars: file.feedback.max_body_chars.unwrap_or(feedback_defaults.max_body_chars),
            low_coverage_threshold: file
                .feedback
                .low_coverage_threshold
                .unwrap_or(feedback_defaults.low_coverage_threshold),
            timeout_s: runner.timeout_s,
        },
        exit_codes: runner.exit_codes.clone(),
    };

    let generator = file.generator;
    let mut backend_params = BackendParams::new();
    let mut put = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            backend_params.insert(key.to_string(), v);
        }
    };
    put("endpoint", args.endpoint.clone().or(generator.endpoint));
    put("model", args.model.clone().or(generator.model));
    put("temperature", generator.temperature.map(|t| t.to_string()));
    put("api_key_env", generator.api_key_env);
    put("timeout_s", generator.timeout_s.map(|t| t.to_string()));

    Ok(Settings {
        backend: args
            .backend
            .clone()
            .or(generator.backend)
            .unwrap_or_else(|| DEFAULT_BACKEND.into()),
        checker: args.checker.clone().unwrap_or_else(|| DEFAULT_CHECKER.into()),
        backend_params,
        runner,
        loop_config,
    })
}

fn target_id(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("target")
        .to_lowercase()
}

fn terminal_code(t: &Terminal) -> u8 {
    match t {
        Terminal::BugFound => exit::BUG_FOUND,
        Terminal::SafeTerminal => exit::SAFE,
        Terminal::BudgetExhausted => exit::BUDGET_EXHAUSTED,
        Terminal::Aborted { .. } => exit::ABORTED,
    }
}

struct Job {
    id: String,
    description: String,
    backend: Box<dyn GenerationBackend>,
    checker: Box<dyn ModelChecker>,
}

pub fn run(args: VerifyArgs) -> Result<u8> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = resolve(&args, file)?;

    if let Some(paths) = &args.ground_truth {
        if !args.targets.is_empty() {
            bail!("--ground-truth checks a specification directly and takes no targets");
        }
        return ground_truth(paths, &args, &settings);
    }
    if args.targets.is_empty() {
        bail!("no targets given (pass description files, or --ground-truth <tla> [cfg])");
    }
    let needs_fixture = settings.backend == "replay" || settings.checker == "recorded";
    if needs_fixture && args.fixture.len() != args.targets.len() {
        bail!(
            "the replay backend and the recorded checker need one --fixture per target ({} targets, {} fixtures)",
            args.targets.len(),
            args.fixture.len()
        );
    }

    let backends = backend_registry();
    let checkers = checker_registry();
    let mut jobs = Vec::new();
    for (i, path) in args.targets.iter().enumerate() {
        let description = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let fixture = args.fixture.get(i).cloned();
        let mut params = settings.backend_params.clone();
        if let Some(f) = &fixture {
            params.insert("fixture".into(), f.display().to_string());
        }
        let backend = backends.create(&settings.backend, &params)?;
        let checker = checkers.create(
            &settings.checker,
            &CheckerParams {
                runner: settings.runner.clone(),
                fixture,
            },
        )?;
        jobs.push(Job {
            id: target_id(path),
            description,
            backend,
            checker,
        });
    }

    let loop_config = &settings.loop_config;
    let records: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|mut job| {
                scope.spawn(move || {
                    run_loop(
                        &job.id,
                        &job.description,
                        loop_config,
                        job.backend.as_mut(),
                        job.checker.as_mut(),
                    )
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("loop thread panicked")).collect()
    });

    let mut code = exit::BUG_FOUND;
    for record in &records {
        let mut line = format!(
            "{}: {} after {} iteration{}",
            record.target_id,
            record.terminal,
            record.metrics.iterations,
            if record.metrics.iterations == 1 { "" } else { "s" }
        );
        if let Some(depth) = record.metrics.trace_depth {
            line.push_str(&format!(", trace depth {depth}"));
        }
        println!("{line}");
        for path in record
            .write_to(&args.out)
            .with_context(|| format!("writing to {}", args.out.display()))?
        {
            println!("  wrote {}", path.display());
        }
        code = code.max(terminal_code(&record.terminal));
    }
    Ok(code)
}

fn ground_truth(paths: &[PathBuf], args: &VerifyArgs, settings: &Settings) -> Result<u8> {
    let tla = &paths[0];
    let cfg = paths.get(1).cloned().unwrap_or_else(|| tla.with_extension("cfg"));
    // A ground-truth check counts as the first iteration, so recorded
    // checkers can serve it from a replay script.
    let artifact = SpecArtifact::from_files(tla, &cfg, 1)?;
    let mut checker = checker_registry().create(
        &settings.checker,
        &CheckerParams {
            runner: settings.runner.clone(),
            fixture: args.fixture.first().cloned(),
        },
    )?;
    let gt = check_ground_truth(&artifact, checker.as_mut(), &settings.runner.exit_codes);

    let mut line = format!("{}: {}", artifact.module_name, gt.outcome);
    if let Some(depth) = gt.trace_depth {
        line.push_str(&format!(", trace depth {depth}"));
    }
    if let Some(n) = gt.states_explored {
        line.push_str(&format!(", {n} distinct states"));
    }
    line.push_str(&format!(", TLC {:.2}s", gt.t_tlc_s));
    if let Some(reason) = &gt.reason {
        line.push_str(&format!(" ({reason})"));
    }
    println!("{line}");

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let out = args.out.join(format!("{}.ground_truth.json", artifact.module_name));
    fs::write(&out, serde_json::to_string_pretty(&gt)? + "\n")?;
    println!("  wrote {}", out.display());
    Ok(match gt.outcome {
        GroundTruthOutcome::Violation => exit::BUG_FOUND,
        GroundTruthOutcome::Safe => exit::SAFE,
        GroundTruthOutcome::Aborted => exit::ABORTED,
    })
}
