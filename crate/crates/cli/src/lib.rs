//! Experiment runner for the `qkd-nutshell` binary.
//!
//! `run` executes one JSON config and writes
//! `<out>/<experiment>/<label>/{results.csv, summary.json, manifest.json}`.
//! `sweep` repeats a run over a parameter grid, one directory per point,
//! and merges the headline statistics into `sweep.csv`.

pub mod config;
pub mod experiments;

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use config::{apply_sweep_value, ExperimentConfig};
use experiments::{run_experiment, Outcome};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(key: &str, msg: impl Display) -> Self {
        CliError::Config(format!("{key}: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qkd-nutshell", version, about = "QKD and QEC emulation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment config (or re-run a manifest.json).
    Run(RunArgs),
    /// Run a config once per grid value of a parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing results.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn io_err(path: &Path, e: impl Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn apply_overrides(mut cfg: ExperimentConfig, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(n) = o.shots {
        if n == 0 {
            return Err(CliError::config("--shots", "must be positive"));
        }
        cfg.shots = Some(n);
    }
    if let Some(out) = &o.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn workers(cfg: &ExperimentConfig, o: &Overrides) -> Result<usize, CliError> {
    match o.workers.or(cfg.workers) {
        Some(0) => Err(CliError::config("--workers", "must be positive")),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results"))
        .join(cfg.experiment.name())
        .join(cfg.label())
}

fn prepare_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if dir.join("results.csv").exists() && !force {
        return Err(CliError::config(
            "--out",
            format!("{} already holds results; pass --force to overwrite", dir.display()),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Writes one artifact set and returns the summary document.
fn write_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    workers: usize,
    started: Instant,
) -> Result<Value, CliError> {
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "label": cfg.label(),
        "seed": cfg.seed,
        "shots": cfg.shots(),
        "headline": outcome.headline,
        "details": outcome.details,
    });
    let summary_bytes = pretty(&summary);
    write(&dir.join("results.csv"), &outcome.csv)?;
    write(&dir.join("summary.json"), &summary_bytes)?;
    let manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "tool": "qkd-nutshell",
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": cfg.seed,
        "workers": workers,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "config": cfg.to_value(),
        "outputs": {
            "results.csv": sha256_hex(&outcome.csv),
            "summary.json": sha256_hex(&summary_bytes),
        },
    });
    write(&dir.join("manifest.json"), &pretty(&manifest))?;
    Ok(summary)
}

/// Runs one config; returns the directory holding its artifacts.
pub fn run(args: &RunArgs) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let cfg = apply_overrides(ExperimentConfig::load(&args.config)?, &args.overrides)?;
    let cfg = ExperimentConfig::from_value(cfg.to_value())?;
    let w = workers(&cfg, &args.overrides)?;
    let dir = run_dir(&cfg);
    prepare_dir(&dir, args.overrides.force)?;
    let outcome = run_experiment(&cfg, w)?;
    write_artifacts(&dir, &cfg, &outcome, w, started)?;
    Ok(dir)
}

fn parse_grid(grid: &str) -> Result<Vec<(String, Value)>, CliError> {
    let tokens: Vec<&str> = grid.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err(CliError::config("--grid", "grid must not be empty"));
    }
    tokens
        .into_iter()
        .map(|t| {
            let v: Value = serde_json::from_str(t).map_err(|_| CliError::config("--grid", format!("{t} is not a number")))?;
            if !v.is_number() {
                return Err(CliError::config("--grid", format!("{t} is not a number")));
            }
            Ok((t.to_string(), v))
        })
        .collect()
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every grid point; returns the sweep directory holding `sweep.csv`.
pub fn sweep(args: &SweepArgs) -> Result<PathBuf, CliError> {
    let base = apply_overrides(ExperimentConfig::load(&args.config)?, &args.overrides)?;
    let grid = parse_grid(&args.grid)?;
    let base_value = base.to_value();
    let root = run_dir(&base);
    let mut configs = Vec::with_capacity(grid.len());
    for (token, v) in &grid {
        let doc = apply_sweep_value(&base_value, base.experiment, &args.param, v.clone())?;
        let mut cfg = ExperimentConfig::from_value(doc)?;
        cfg.label = Some(format!("{}/{}={}", base.label(), args.param, token));
        configs.push((token, cfg));
    }
    if root.join("sweep.csv").exists() && !args.overrides.force {
        return Err(CliError::config(
            "--out",
            format!("{} already holds a sweep; pass --force to overwrite", root.display()),
        ));
    }
    let mut rows: Vec<(String, Map<String, Value>)> = Vec::new();
    for (token, cfg) in configs {
        let started = Instant::now();
        let w = workers(&cfg, &args.overrides)?;
        let dir = root.join(format!("{}={}", args.param, token));
        prepare_dir(&dir, args.overrides.force)?;
        let outcome = run_experiment(&cfg, w)?;
        write_artifacts(&dir, &cfg, &outcome, w, started)?;
        rows.push((token.clone(), outcome.headline));
    }
    let mut columns: Vec<String> = Vec::new();
    for (_, h) in &rows {
        for k in h.keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let mut out = String::new();
    out.push_str(&args.param);
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (token, h) in &rows {
        out.push_str(token);
        for c in &columns {
            out.push(',');
            out.push_str(&h.get(c).map(csv_cell).unwrap_or_default());
        }
        out.push('\n');
    }
    write(&root.join("sweep.csv"), out.as_bytes())?;
    Ok(root)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("qkd-nutshell: {e}");
            e.exit_code()
        }
    }
}
