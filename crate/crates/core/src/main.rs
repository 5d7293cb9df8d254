use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperswarm::runner::{self, output, ExperimentConfig};
use hyperswarm::Error;

/// Train swarm-driven stochastic policies on the bundled environments.
#[derive(Parser)]
#[command(name = "hyperswarm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write its artifacts.
    Run {
        config: PathBuf,
        /// Replaces the seed of the experiment file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the file's `output_dir`, then
        /// `runs/<problem>_seed<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the generation budget.
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Check an experiment file and the environment it names.
    Validate { config: PathBuf },
    /// Monte Carlo score of the untrained or random reference policy.
    Baseline {
        config: PathBuf,
        #[arg(long)]
        rollouts: usize,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json { .. } | Error::Io { .. } => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn load(path: &PathBuf) -> Result<(ExperimentConfig, hyperswarm::envs::EnvConfig), Error> {
    let cfg = ExperimentConfig::load(path)?;
    let env = cfg.load_env()?;
    Ok((cfg, env))
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            generations,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(g) = generations {
                cfg.cmaes.max_generations = g;
            }
            cfg.validate()?;
            let report = runner::run_experiment(&cfg)?;
            let dir = runner::output_dir(&cfg, out.as_deref());
            output::write_outputs(&report, &dir)?;
            println!("{}: {}", cfg.problem.name(), report.summary);
            println!("artifacts in {}", dir.display());
            if report.converged == Some(false) {
                eprintln!("target not reached");
                return Ok(EXIT_NOT_CONVERGED);
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let (cfg, env) = load(&config)?;
            println!(
                "ok: problem {}, seed {}, {} environment {}",
                cfg.problem.name(),
                cfg.seed,
                env.kind(),
                cfg.env.display()
            );
            Ok(0)
        }
        Command::Baseline { config, rollouts } => {
            let cfg = ExperimentConfig::load(&config)?;
            let b = runner::baseline(&cfg, rollouts)?;
            println!(
                "{} baseline ({}), {} rollouts: mean {:.6}, sd {:.6}",
                b.problem.name(),
                b.description,
                b.rollouts,
                b.mean,
                b.sd
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
