//! Command-line driver for synthetic synchronization experiments and
//! multi-scan registration.

pub mod manifest;
pub mod output;
pub mod register;
pub mod synth;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use manifest::{load_manifest, Command, OutputFormat, Overrides, Resolved, RunManifest};
use output::{ensure_dir, write_file, Header};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<dqsync::Error> for CliError {
    fn from(e: dqsync::Error) -> Self {
        use dqsync::Error as E;
        match e {
            E::Io(_) | E::MalformedHeader(_) | E::UnsupportedFormat(_) | E::TruncatedBody(_) => CliError::Io(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dqsync", version, about = "SE(3) synchronization with unit dual quaternions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Synthetic trials per (p, sigma_t, sigma_r) cell; one summary row per cell.
    Synth,
    /// Per-iteration error traces, one file per trial.
    Trace,
    /// Pairwise ICP, synchronization and merged-cloud export for a set of PLY scans.
    Register,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run manifest.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads for trials and pairwise ICP.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

/// Resolves the configuration, runs the command and returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let command = match cli.command {
        CliCommand::Synth => Command::Synth,
        CliCommand::Trace => Command::Trace,
        CliCommand::Register => Command::Register,
    };
    let (manifest, dir) = match &cli.common.manifest {
        Some(p) => (load_manifest(p)?, p.parent().map(|d| d.to_path_buf())),
        None => (RunManifest::default(), None),
    };
    let flags = Overrides {
        seed: cli.common.seed,
        out: cli.common.out.clone(),
        format: cli.common.format,
        parallel: cli.common.parallel,
        trials: cli.common.trials,
    };
    let mut cfg = Resolved::new(command, manifest, dir.as_deref(), flags)?;
    let scans = match command {
        Command::Register => {
            let (clouds, raw) = register::read_scans(cfg.register.as_ref().expect("validated"))?;
            cfg.attach_scan_digests(&raw);
            clouds
        }
        _ => Vec::new(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", cfg.parallel)))?;

    ensure_dir(&cfg.out)?;
    let header = Header { command: command.name(), manifest_sha256: cfg.hash(), seed: cfg.seed, meta: Vec::new() };
    let mut resolved = serde_json::to_string_pretty(&cfg).expect("serializable");
    resolved.push('\n');
    write_file(&cfg.out.join("manifest.json"), resolved.as_bytes())?;

    let mut written = match command {
        Command::Synth => synth::cmd_synth(&cfg, &header, &pool)?,
        Command::Trace => synth::cmd_trace(&cfg, &header, &pool)?,
        Command::Register => register::cmd_register(&cfg, &scans, &header, &pool)?,
    };
    written.insert(0, cfg.out.join("manifest.json"));
    Ok(written)
}
