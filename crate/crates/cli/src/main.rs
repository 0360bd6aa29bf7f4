//! Batch experiment runner: reads a JSON config, executes one pipeline
//! command, and writes CSV/JSON/SVG artifacts into the output directory.
//!
//! Exit codes: 0 on success, 2 when a verification flag failed, 1 on error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use levy_besov_cli::commands::{self, CommandKind};
use levy_besov_cli::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(
    name = "levy-besov",
    version,
    about = "Wavelet-domain Besov experiments for Levy white noises"
)]
struct Args {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,

    /// Pipeline command to run.
    #[arg(long, value_enum)]
    command: CommandKind,

    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (falls back to LEVY_BESOV_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(args: Args) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| anyhow::anyhow!("reading config {}: {e}", args.config.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("parsing config: {e}"))?;
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let threads = args.threads.or_else(|| {
        std::env::var("LEVY_BESOV_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| anyhow::anyhow!("building worker pool: {e}"))?;
    let code = pool.install(|| commands::run_experiment(&cfg, args.command))?;
    Ok(code as u8)
}
