//! Config-driven experiments: training loops, Monte Carlo baselines and run
//! artifacts.

pub mod config;
pub mod frog;
pub mod labyrinth;
pub mod multilayer;
pub mod output;
pub mod rollout;
pub mod two_player;

use std::path::{Path, PathBuf};
use std::time::Duration;

use num_complex::Complex64;
use serde::Serialize;

use crate::envs::{EnvConfig, LabyrinthConfig};
use crate::error::{Error, Result};
use crate::swarm::Trajectory;

pub use config::{CmaesSettings, ExperimentConfig, Problem, RolloutSettings, Schedule};
pub use frog::{run_frog, FrogRun, GaussianSwarmPolicy};
pub use labyrinth::{labyrinth_baseline, run_labyrinth, LabyrinthRun, Method};
pub use multilayer::{run_multilayer, MultilayerRun};
pub use rollout::{Direction, Training};
pub use two_player::{run_two_player, TwoPlayerRun};

/// One row of `rewards.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub generation: usize,
    /// Best score evaluated so far.
    pub best: f64,
    /// Mean score of this generation's population.
    pub mean: f64,
    /// Player name in two-player games.
    pub player: Option<String>,
    /// Wall time since training started; never written to disk.
    pub elapsed: Duration,
}

/// Disc points at one time, grouped for rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub groups: Vec<(String, Vec<Complex64>)>,
}

impl Snapshot {
    /// Snapshots at the start, middle and end of `traj`; consecutive runs of
    /// the state vector are labelled by `groups` (name, size).
    pub(crate) fn from_trajectory(traj: &Trajectory<Vec<Complex64>>, horizon: f64, groups: &[(&str, usize)]) -> Vec<Snapshot> {
        rollout::snapshot_times(horizon)
            .iter()
            .map(|&t| {
                let state = traj.nearest(t);
                let mut offset = 0;
                let groups = groups
                    .iter()
                    .map(|&(name, n)| {
                        let pts = state[offset..offset + n].to_vec();
                        offset += n;
                        (name.to_string(), pts)
                    })
                    .collect();
                Snapshot { t, groups }
            })
            .collect()
    }
}

/// Everything a finished run writes to its output directory.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<TrainingRecord>,
    /// Contents of `policy.json`.
    pub policy: serde_json::Value,
    pub snapshots: Vec<Snapshot>,
    pub trajectory: Option<Trajectory<Vec<Complex64>>>,
    /// Labyrinth walk of the final policy.
    pub path: Option<(LabyrinthConfig, Vec<[f64; 2]>)>,
    /// Whether the configured target was reached; `None` without a target.
    pub converged: Option<bool>,
    pub summary: String,
}

/// Runs the experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let env = cfg.load_env()?;
    match (cfg.problem, &env) {
        (Problem::Frog, EnvConfig::Frog(e)) => frog::report(cfg, &run_frog(cfg, e)?),
        (Problem::Multilayer, EnvConfig::Multilayer(e)) => multilayer::report(cfg, e, &run_multilayer(cfg, e)?),
        (Problem::LabyrinthM1, EnvConfig::Labyrinth(e)) => labyrinth::report(cfg, e, &run_labyrinth(cfg, e, Method::Phases)?),
        (Problem::LabyrinthM2, EnvConfig::Labyrinth(e)) => {
            labyrinth::report(cfg, e, &run_labyrinth(cfg, e, Method::WrappedCauchy)?)
        }
        (Problem::TwoFrogs | Problem::PlaneGame, _) => two_player::report(cfg, &run_two_player(cfg, &env)?),
        _ => unreachable!("load_env checks the environment kind"),
    }
}

/// Monte Carlo reference score of an untrained policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    pub problem: Problem,
    pub rollouts: usize,
    pub description: &'static str,
    pub mean: f64,
    pub sd: f64,
}

/// Baseline for the experiment's environment: uniformly random step angles
/// for the labyrinth, the untrained (identity-dynamics) policy elsewhere.
pub fn baseline(cfg: &ExperimentConfig, rollouts: usize) -> Result<Baseline> {
    if rollouts == 0 {
        return Err(Error::config("rollouts must be positive"));
    }
    cfg.validate()?;
    let env = cfg.load_env()?;
    let streams = rollout::Streams::new(cfg.seed);
    let (description, (mean, sd)) = match (&env, cfg.problem) {
        (EnvConfig::Labyrinth(e), _) => (
            "uniformly random step angles",
            labyrinth_baseline(e, rollouts, &mut streams.baseline.clone()),
        ),
        _ => ("untrained policy", untrained_score(cfg, &env, rollouts)?),
    };
    Ok(Baseline {
        problem: cfg.problem,
        rollouts,
        description,
        mean,
        sd,
    })
}

fn untrained_score(cfg: &ExperimentConfig, env: &EnvConfig, rollouts: usize) -> Result<(f64, f64)> {
    let streams = rollout::Streams::new(cfg.seed);
    match env {
        EnvConfig::Frog(e) => {
            let z0 = frog::frog_initial_points(cfg)?;
            let zero = vec![0.0; config_dim(cfg)];
            let (_, m, sd) = frog::score_policy(cfg, e, &zero, &z0, rollouts, &streams.baseline)?;
            Ok((m, sd))
        }
        EnvConfig::Multilayer(e) => Ok((multilayer::identity_error(e) as f64, 0.0)),
        EnvConfig::TwoFrogs(_) | EnvConfig::PlaneGame(_) => {
            let zero = vec![0.0; config_dim(cfg)];
            let joint = two_player::score_joint(cfg, env, [&zero[..], &zero[..]], rollouts, &streams.baseline)?;
            Ok((joint[0] + joint[1], 0.0))
        }
        EnvConfig::Labyrinth(_) => unreachable!("handled by the caller"),
    }
}

/// Parameter count of the experiment's policy layout.
fn config_dim(cfg: &ExperimentConfig) -> usize {
    use crate::envs::layout::PolicyLayout;
    match cfg.problem {
        Problem::Frog => PolicyLayout::FullSwarm { n: frog::FROG_POINTS }.dim(),
        Problem::TwoFrogs | Problem::PlaneGame => PolicyLayout::FullSwarm { n: two_player::PLAYER_POINTS }.dim(),
        Problem::Multilayer => PolicyLayout::SubSwarm { sizes: vec![1, 1] }.dim(),
        Problem::LabyrinthM1 | Problem::LabyrinthM2 => labyrinth::CHAIN_LENGTH,
    }
}

/// Output directory: the command-line override, else the config's, else
/// `runs/<problem>_seed<seed>`.
pub fn output_dir(cfg: &ExperimentConfig, overridden: Option<&Path>) -> PathBuf {
    overridden
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}_seed{}", cfg.problem.name(), cfg.seed)))
}
