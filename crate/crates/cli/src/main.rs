use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use projwalk_cli::{experiments, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "projwalk", version, about = "Random matrix products on projective space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Outputs do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and its ensemble without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, seed, out, workers } => {
            let cfg = ExperimentConfig::load(&config, seed, out)?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(w) = workers {
                pool = pool.num_threads(w);
            }
            let manifest = pool.build()?.install(|| experiments::run(&cfg))?;
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, cfg.out.join(&o.file).display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config, None, None)?;
            let ens = cfg.ensemble()?;
            experiments::check_dimensions(&cfg, &ens)?;
            println!("ok: experiment {} on a d = {} ensemble with {} matrices", cfg.experiment, ens.dim(), ens.len());
            Ok(())
        }
    }
}
