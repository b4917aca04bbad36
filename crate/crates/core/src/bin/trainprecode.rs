use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trainprecode::experiment::{cmd_optimize, cmd_pareto, cmd_sweep, thread_pool, ExperimentConfig};

#[derive(Parser)]
#[command(name = "trainprecode", about = "Joint pilot and precoder optimization experiments")]
struct Cli {
    /// Master seed for the Monte Carlo sample set (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config; default ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured mode and write trace.csv and result.csv.
    Optimize { config: PathBuf },
    /// Compare joint, precoder-only and unoptimized designs over an SNR list.
    Sweep { config: PathBuf },
    /// Sample the Pareto border of achievable SNR profiles.
    Pareto {
        config: PathBuf,
        #[arg(long, default_value_t = 64)]
        dirs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = match &cli.command {
        Command::Optimize { config } | Command::Sweep { config } | Command::Pareto { config, .. } => config,
    };
    let run = || -> Result<(trainprecode::experiment::Outcome, PathBuf), trainprecode::Error> {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = cli.seed {
            cfg = cfg.with_seed(seed);
        }
        let out = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
        let pool = thread_pool()?;
        let outcome = pool.install(|| match &cli.command {
            Command::Optimize { .. } => cmd_optimize(&cfg),
            Command::Sweep { .. } => cmd_sweep(&cfg),
            Command::Pareto { dirs, .. } => cmd_pareto(&cfg, *dirs),
        })?;
        Ok((outcome, out))
    };
    match run() {
        Ok((outcome, out)) => {
            if let Err(e) = outcome.write_to(&out) {
                eprintln!("error: writing {}: {e}", out.display());
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
