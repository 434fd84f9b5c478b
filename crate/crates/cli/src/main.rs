//! Command-line front end: dataset generation, preprocessing, distribution
//! fitting, epsilon tuning and replay inspection.

mod commands;
mod config;
mod errors;
mod rawlog;
mod resultfile;
mod trajfile;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "dropo",
    version,
    about = "Fit domain-randomization distributions over physics parameters to offline trajectories",
    disable_help_subcommand = true
)]
struct Cli {
    /// Run configuration file (strict TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the seeds in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap worker threads; has no effect on results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the optimizer objective (dropo or droid).
    #[arg(long, global = true)]
    objective: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic trajectories under known ground-truth dynamics.
    Gen {
        /// Output trajectory path; a ground-truth sidecar is written next
        /// to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a raw sensor log into a simulator-aligned trajectory file.
    Preprocess {
        /// Raw log path.
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print a heuristic cross-correlation offset estimate for a
        /// channel pair given as BASE:SHIFTED, then continue.
        #[arg(long)]
        suggest_offset: Option<String>,
    },
    /// Fit a dynamics distribution to one or more trajectory files.
    Fit {
        /// Trajectory files; transitions are concatenated in order.
        #[arg(required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep epsilon candidates and select the smallest one whose
    /// converged error beats the threshold.
    TuneEpsilon {
        #[arg(required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a dataset under fixed parameters and report the error.
    Replay {
        #[arg(required = true)]
        data: Vec<PathBuf>,
        /// Comma-separated name=value parameter list.
        #[arg(long, conflicts_with_all = ["result", "truth"])]
        params: Option<String>,
        /// Use the converged means of a result file.
        #[arg(long, conflicts_with = "truth")]
        result: Option<PathBuf>,
        /// Use the first dynamics draw of a ground-truth sidecar.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Write a per-transition, per-dimension squared-error CSV.
        #[arg(long)]
        breakdown: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot configure worker pool: {e}")))?;
    }
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::usage("--config is required"))?;
    let mut config = config::RunConfig::from_path(config_path)?;
    config.apply_overrides(cli.seed, cli.objective.as_deref());
    if let Some(objective) = &cli.objective {
        // validate even when the config has no optimizer section
        config::parse_objective(objective)?;
    }

    match cli.command {
        Command::Gen { out } => commands::gen(&config, &out),
        Command::Preprocess {
            log,
            out,
            suggest_offset,
        } => commands::preprocess(&config, &log, &out, suggest_offset.as_deref()),
        Command::Fit { data, out } => commands::fit(&config, &data, &out),
        Command::TuneEpsilon { data, out } => commands::tune_epsilon(&config, &data, &out),
        Command::Replay {
            data,
            params,
            result,
            truth,
            breakdown,
        } => commands::replay(
            &config,
            &data,
            params.as_deref(),
            result.as_deref(),
            truth.as_deref(),
            breakdown.as_deref(),
        ),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; everything else is a
            // usage error under the exit-status contract
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
