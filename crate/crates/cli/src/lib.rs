//! `qcov` batch runner: reads an INI configuration, runs the requested
//! suites, writes CSV tables and a `manifest.json` into the output directory.
//!
//! Exit codes: 0 when every assertion holds, 1 when one fails, 2 for
//! configuration or usage errors.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use config::{Config, Overrides, DEFAULT_CONFIG};
use output::{read_config_source, write_atomic, RunManifest};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable fixing the worker-thread count.
pub const THREADS_VAR: &str = "QCOV_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qcov_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(name = "qcov", version, about = "Quadratic covariation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// INI configuration, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "qcov-out")]
    out: PathBuf,
    /// Master seed for every section.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated eps values for every section.
    #[arg(long, global = true, value_delimiter = ',', num_args = 0..)]
    epsilons: Option<Vec<f64>>,
    /// Replica count for every section.
    #[arg(long, global = true)]
    replicas: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Exact identities and refinement ladders.
    Verify,
    /// Sup-tail probabilities of the normalized remainder.
    Tails,
    /// Modulus of continuity against the Levy bound.
    Levy,
    /// Time-reversed Brownian motion diagnostics.
    Beta,
    /// Martingale tail bound check.
    Mart,
    /// Closed-form bound table.
    Bounds,
    /// Everything above plus the consistency and normalized-sup tables.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Tails => "tails",
            Command::Levy => "levy",
            Command::Beta => "beta",
            Command::Mart => "mart",
            Command::Bounds => "bounds",
            Command::Report => "report",
        }
    }

    fn runner(self) -> fn(&Config) -> Result<commands::Outcome, CliError> {
        match self {
            Command::Verify => commands::verify,
            Command::Tails => commands::tails,
            Command::Levy => commands::levy,
            Command::Beta => commands::beta,
            Command::Mart => commands::mart,
            Command::Bounds => commands::bounds,
            Command::Report => commands::report,
        }
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_VAR) {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_VAR}={text}: expected a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let started = unix_now();
    let clock = Instant::now();
    let text = match &cli.config {
        Some(path) => read_config_source(path)?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        epsilons: cli.epsilons.clone(),
        replicas: cli.replicas,
    };
    let config = Config::parse(&text, &overrides)?;
    let pool = thread_pool()?;
    let threads = pool.current_num_threads();
    let outcome = pool.install(|| (cli.command.runner())(&config))?;

    let mut outputs = Vec::new();
    for (name, bytes) in &outcome.files {
        write_atomic(&cli.out, name, bytes)?;
        outputs.push(name.clone());
    }
    for note in &outcome.notes {
        println!("{note}");
    }
    for failure in &outcome.failures {
        eprintln!("FAIL: {failure}");
    }
    let passed = outcome.failures.is_empty();
    let manifest = RunManifest {
        tool: "qcov".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        config: config.canonical(),
        seed: cli.seed.or(Some(config.verify.seed)),
        threads,
        started_unix: started,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        outputs,
        passed,
    };
    manifest.write(&cli.out)?;
    println!(
        "{}: {} ({} files in {})",
        cli.command.name(),
        if passed { "pass" } else { "FAIL" },
        manifest.outputs.len() + 1,
        cli.out.display()
    );
    Ok(passed)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("qcov: {e}");
            EXIT_USAGE
        }
    }
}
