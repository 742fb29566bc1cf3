//! Command-line harness: configuration, dispatch, output files and run
//! manifests for the `armcmc` library.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::commands::{execute, BoundKind, Command, VerifyKind};
use crate::config::{ExperimentConfig, ModelChoice, Purpose};
use crate::error::{exit, CliError};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "armcmc", version, about = "Samplers, convergence bounds and diagnostics for attractive-repulsive particle MCMC")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Model; overrides the configuration.
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelChoice>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "armcmc-out")]
    pub out: PathBuf,
    /// Worker threads. Affects speed only, never results.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run an ensemble and write one trace CSV per chain.
    Simulate,
    /// Compute a convergence bound.
    Bound {
        #[command(subcommand)]
        kind: BoundCommand,
    },
    /// Numerically audit a certificate of the planar model.
    Verify {
        #[command(subcommand)]
        kind: VerifyCommand,
    },
    /// Potential scale reduction factors of an ensemble.
    Diagnose,
    /// Functional estimates of the total variation distance over iterations.
    TvCurve,
    /// Rerun the command recorded in a manifest.
    Replay {
        /// Path to a manifest.json written by an earlier run.
        manifest: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// Minorization bound for the three-particle square model.
    Uniform,
    /// Shift-coupling bound for the planar model.
    ShiftCoupling {
        /// Exponent r; overrides the configuration.
        #[arg(long)]
        r: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    Drift,
    Minorization,
    ProofConstants,
}

fn purpose(command: Command) -> Purpose {
    match command {
        Command::Simulate => Purpose::Simulate,
        Command::Diagnose => Purpose::Diagnose,
        Command::TvCurve => Purpose::TvCurve,
        _ => Purpose::Other,
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

/// Works out the command and the unresolved configuration from the arguments.
fn plan(cli: &Cli) -> Result<(Command, ExperimentConfig), CliError> {
    let (command, mut cfg) = match &cli.command {
        CliCommand::Replay { manifest } => {
            let text = fs::read_to_string(manifest).map_err(|e| CliError::Io(format!("{}: {e}", manifest.display())))?;
            let m: RunManifest =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid manifest: {e}")))?;
            let words: Vec<&str> = m.command.iter().map(String::as_str).collect();
            let command = Command::from_words(&words)
                .ok_or_else(|| CliError::Usage(format!("manifest has unknown command {:?}", m.command)))?;
            (command, ExperimentConfig::parse(&m.config_toml)?)
        }
        other => {
            let cfg = match &cli.config {
                Some(p) => read_config(p)?,
                None => ExperimentConfig::default(),
            };
            let mut cfg = cfg;
            let command = match other {
                CliCommand::Simulate => Command::Simulate,
                CliCommand::Bound { kind: BoundCommand::Uniform } => Command::Bound(BoundKind::Uniform),
                CliCommand::Bound { kind: BoundCommand::ShiftCoupling { r } } => {
                    if r.is_some() {
                        cfg.shift.r = *r;
                    }
                    Command::Bound(BoundKind::ShiftCoupling)
                }
                CliCommand::Verify { kind } => Command::Verify(match kind {
                    VerifyCommand::Drift => VerifyKind::Drift,
                    VerifyCommand::Minorization => VerifyKind::Minorization,
                    VerifyCommand::ProofConstants => VerifyKind::ProofConstants,
                }),
                CliCommand::Diagnose => Command::Diagnose,
                CliCommand::TvCurve => Command::TvCurve,
                CliCommand::Replay { .. } => unreachable!(),
            };
            (command, cfg)
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.model.is_some() {
        cfg.model = cli.model;
    }
    Ok((command, cfg))
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let (command, cfg) = match plan(&cli).and_then(|(c, cfg)| Ok((c, cfg.resolve(purpose(c))?))) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("armcmc: {e}");
            return e.exit_code();
        }
    };
    let mut out = match OutputDir::create(&cli.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("armcmc: {e}");
            return e.exit_code();
        }
    };
    let work = |out: &mut OutputDir| execute(command, &cfg, out);
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| work(&mut out)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => work(&mut out),
    };
    let (code, error, value) = match result {
        Ok(v) => (exit::OK, None, v),
        Err(e) => (e.exit_code(), Some(e.to_string()), serde_json::Value::Null),
    };
    let manifest = RunManifest {
        command: command.words().iter().map(|s| s.to_string()).collect(),
        config_toml: cfg.to_toml(),
        config: cfg,
        rng_algorithm: armcmc::RNG_ALGORITHM.to_string(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: cli.threads,
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        exit_code: code,
        error: error.clone(),
        outputs: out.written().to_vec(),
        result: value.clone(),
    };
    if let Err(e) = out.write_json(MANIFEST_FILE, &manifest) {
        eprintln!("armcmc: {e}");
        return e.exit_code();
    }
    match error {
        Some(msg) => {
            eprintln!("armcmc: {msg}");
            code
        }
        None => {
            // a closed stdout (e.g. piped into head) is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&value).unwrap_or_default());
            code
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            code
        }
    }
}
