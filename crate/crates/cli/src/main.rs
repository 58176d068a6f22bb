//! `apwave <kind> --config <path> [--out <dir>] [--threads N]`
//!
//! Exit status: 0 on success, 2 when a verdict fails, 1 on errors.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use config::{Kind, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "apwave", version, about = "Almost-periodic entropy solution experiments")]
struct Cli {
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory, created if missing.
    #[arg(long, default_value = "apwave-out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: String,
    status: &'a str,
    version: &'static str,
    config_path: String,
    config_sha256: String,
    config: Value,
    config_text: &'a str,
    threads: usize,
    mem_cap_mb: usize,
    wall_time_s: f64,
    artifacts: Vec<String>,
    errors: Vec<String>,
    summary: Value,
}

fn write_manifest(out: &Path, m: &Manifest) -> Result<()> {
    let mut body = serde_json::to_string_pretty(m)?;
    body.push('\n');
    std::fs::write(out.join("manifest.json"), body).context("writing manifest.json")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("apwave: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let start = Instant::now();
    let mut manifest = Manifest {
        kind: cli.kind.to_string(),
        status: "ok",
        version: env!("CARGO_PKG_VERSION"),
        config_path: cli.config.display().to_string(),
        config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        config: Value::Null,
        config_text: &text,
        threads: rayon::current_num_threads(),
        mem_cap_mb: apwave_core::solver::memory_cap_mb(),
        wall_time_s: 0.0,
        artifacts: Vec::new(),
        errors: Vec::new(),
        summary: Value::Null,
    };

    let validated = RunConfig::parse(&text).and_then(|cfg| {
        let inputs = cfg.validate(cli.kind)?;
        Ok((cfg, inputs))
    });
    let (cfg, inputs) = match validated {
        Ok(v) => v,
        Err(errs) => {
            for e in &errs {
                eprintln!("invalid config: {e}");
            }
            manifest.status = "invalid-config";
            manifest.errors = errs;
            write_manifest(&cli.out, &manifest)?;
            return Ok(ExitCode::from(1));
        }
    };
    manifest.config = serde_json::to_value(&cfg)?;

    let result = run::run_experiment(cli.kind, &cfg, &inputs, &cli.out);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let code = match result {
        Ok(outcome) => {
            manifest.artifacts = outcome.artifacts;
            manifest.summary = outcome.summary;
            if outcome.verdict_ok {
                ExitCode::SUCCESS
            } else {
                manifest.status = "verdict-failed";
                eprintln!("apwave: verdict failed, see {}", cli.out.join("manifest.json").display());
                ExitCode::from(2)
            }
        }
        Err(e) => {
            manifest.status = "error";
            manifest.errors = vec![format!("{e:#}")];
            manifest.artifacts = list_artifacts(&cli.out);
            eprintln!("apwave: {e:#}");
            ExitCode::from(1)
        }
    };
    write_manifest(&cli.out, &manifest)?;
    Ok(code)
}

/// Files already present in the output directory, for failure manifests.
fn list_artifacts(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n != "manifest.json")
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}
