use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use ghl_cli::config::{validate_config, ConfigError, ExperimentName};
use ghl_cli::report::{config_hash, emit_artifacts, Artifact, Verdict};
use ghl_cli::run::{run, RunError};

#[derive(Debug, Parser)]
#[command(name = "ghl", version, about = "Run one experiment and report a verdict")]
struct Args {
    /// Experiment name, e.g. `atiyah` or `eta-tower`.
    experiment: ExperimentName,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for artifacts; defaults to the config's `output` or
    /// `ghl-out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace existing artifacts.
    #[arg(long)]
    force: bool,
}

const CHECK_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const NUMERICAL: u8 = 3;

fn fail(experiment: ExperimentName, code: u8, kind: &str, message: String, extra: serde_json::Value) -> ExitCode {
    eprintln!("ghl {experiment}: {message}");
    let mut body = json!({ "experiment": experiment, "error": kind, "message": message, "exit_code": code });
    if let (Some(b), Some(e)) = (body.as_object_mut(), extra.as_object()) {
        b.extend(e.clone());
    }
    println!("{body}");
    ExitCode::from(code)
}

fn config_error(experiment: ExperimentName, e: ConfigError) -> ExitCode {
    let path = e.path.clone();
    fail(experiment, CONFIG_ERROR, "config", e.to_string(), json!({ "path": path }))
}

fn set_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("GHL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("GHL_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let name = args.experiment;
    if let Err(e) = set_threads() {
        return fail(name, CONFIG_ERROR, "environment", e, json!({}));
    }
    let raw = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(s) => s,
            Err(e) => return fail(name, CONFIG_ERROR, "io", format!("{}: {e}", p.display()), json!({})),
        },
        None if name == ExperimentName::CliffordSelftest => format!("{{\"experiment\":\"{name}\"}}"),
        None => return fail(name, CONFIG_ERROR, "config", "--config is required".into(), json!({})),
    };
    let mut cfg = match validate_config(&raw, Some(name)) {
        Ok(c) => c,
        Err(e) => return config_error(name, e),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }

    let start = Instant::now();
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(RunError::Input(e)) => return fail(name, CONFIG_ERROR, "input", e.to_string(), json!({})),
        Err(RunError::Numerical(e)) => {
            let extra = match &e {
                ghl::Error::AmbiguousRank { gap_ratio, threshold } => {
                    json!({ "gap_ratio": gap_ratio, "threshold": threshold })
                }
                ghl::Error::Resolution { step, limit } => json!({ "step": step, "limit": limit }),
                _ => json!({}),
            };
            return fail(name, NUMERICAL, "numerical", e.to_string(), extra);
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let dir = args
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ghl-out").join(name.as_str()));
    let names = outcome.artifacts.iter().map(|a| a.name.clone()).collect();
    let verdict = Verdict::new(name, config_hash(&raw), cfg.seed, outcome.checks, names, wall);
    let text = match serde_json::to_string_pretty(&verdict) {
        Ok(t) => t,
        Err(e) => return fail(name, CONFIG_ERROR, "io", e.to_string(), json!({})),
    };
    let mut artifacts = outcome.artifacts;
    artifacts.push(Artifact {
        name: "verdict.json".into(),
        bytes: format!("{text}\n").into_bytes(),
    });
    if let Err(e) = emit_artifacts(&artifacts, &dir, args.force) {
        return fail(name, CONFIG_ERROR, "io", e.to_string(), json!({}));
    }
    println!("{text}");
    if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    }
}
