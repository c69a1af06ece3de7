//! Command-line experiment runner: loads a JSON config, executes the
//! requested experiment, writes data artifacts plus a run manifest, and
//! exits 0 when every check passed, 1 when any failed, 2 on config or
//! runtime errors.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use config::{config_digest, ExperimentConfig, EXPERIMENT_KINDS};
use output::{OutDir, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty series")]
    EmptySeries,
    #[error("{0}")]
    Module(#[from] ergoperiod_core::ErgoError),
}

#[derive(Parser)]
#[command(
    name = "ergoperiod",
    version,
    about = "Experiments on random periodic paths, periodic measures, \
             PS-ergodicity and upper expectations"
)]
struct Args {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; falls back to the config, then ERGOPERIOD_WORKERS.
    /// Results are identical for any worker count.
    #[arg(long)]
    workers: Option<usize>,

    /// Directory for manifests and data files.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Print the known experiment kinds and exit.
    #[arg(long)]
    list_experiments: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_experiments {
        for kind in EXPERIMENT_KINDS {
            println!("{kind}");
        }
        return ExitCode::SUCCESS;
    }
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn env_workers() -> Option<usize> {
    std::env::var("ERGOPERIOD_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let config_path = args.config.as_ref().ok_or_else(|| {
        CliError::Config("--config <path> is required (or use --list-experiments)".into())
    })?;
    let text = std::fs::read_to_string(config_path)?;
    let config = ExperimentConfig::from_json(&text)?;
    let digest = config_digest(&text)?;
    let seed = args.seed.unwrap_or(config.seed);

    let workers = args.workers.or(config.workers).or_else(env_workers);
    if let Some(w) = workers {
        // ignore the error when a pool already exists (repeat invocations
        // inside one process, e.g. tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }

    let started = Instant::now();
    let mut out = OutDir::create(&args.out)?;
    let checks = experiments::run(&config.experiment, seed, &mut out)?;
    let all_passed = checks.iter().all(|c| c.pass);
    for check in &checks {
        let status = if check.pass { "PASS" } else { "FAIL" };
        match check.value {
            Some(v) => println!("[{status}] {} = {v}", check.name),
            None => println!("[{status}] {}", check.name),
        }
    }

    let artifacts = out.files();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.kind_name().to_string(),
        config_digest: digest,
        seed,
        workers: workers.unwrap_or_else(rayon::current_num_threads),
        all_passed,
        checks,
        artifacts,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    out.write_json("manifest.json", &manifest)?;
    println!(
        "{}: {} ({} artifacts in {})",
        config.experiment.kind_name(),
        if all_passed {
            "all checks passed"
        } else {
            "CHECKS FAILED"
        },
        manifest.artifacts.len() + 1,
        out.path().display()
    );
    Ok(all_passed)
}
