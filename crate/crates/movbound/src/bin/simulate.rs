//! Command-line driver: runs a JSON-configured simulation and writes its
//! artifacts. Logging is controlled by the `WGF_LOG` environment variable
//! (standard `env_logger` filter syntax, e.g. `WGF_LOG=info`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use movbound::runner;

#[derive(Parser)]
#[command(
    name = "simulate",
    version,
    about = "Moving-boundary diffusion runs: proximal scheme, front-tracking reference, \
             cross-checks, certification, and refinement sweeps"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Override the configured mode (jko, pde, compare, certify, sweep).
    #[arg(long)]
    mode: Option<String>,

    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for independent sub-runs (output bytes never depend
    /// on this).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WGF_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more certificates failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> movbound::Result<bool> {
    let mut cfg = runner::load_config(&cli.config)?;
    if let Some(mode) = &cli.mode {
        cfg.mode = mode.parse()?;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let summary = runner::run(&cfg, cli.jobs)?;
    println!(
        "wrote {} file(s) to {}",
        summary.files.len(),
        summary.out_dir.display()
    );
    Ok(summary.all_pass)
}
