use num_complex::Complex64;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::rollout::{
    evolve, initial_points, sample_gaussians, to_gaussians, train, trajectory, Direction, Streams, Training,
};
use super::{RunReport, Snapshot};
use crate::dist::RngHandle;
use crate::envs::layout::{DecodedPolicy, PolicyLayout};
use crate::envs::{frog_reward, FrogConfig};
use crate::error::Result;
use crate::geom::GaussianParams;
use crate::stats::mean_var;
use crate::swarm::SwarmRecord;

/// Oscillators, and therefore jumps, of the single-frog policy.
pub const FROG_POINTS: usize = 5;

/// Jumps with `|m|` below this are the free jumps of a trained policy.
pub const FREE_MEAN: f64 = 0.2;

/// A swarm-driven Gaussian policy: the swarm moves seeded initial points and
/// each endpoint becomes one Gaussian.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianSwarmPolicy {
    pub x: Vec<f64>,
    pub swarm: SwarmRecord,
    pub initial_points: Vec<[f64; 2]>,
    pub final_points: Vec<[f64; 2]>,
    pub distributions: Vec<GaussianParams>,
}

impl GaussianSwarmPolicy {
    pub(crate) fn build(layout: &PolicyLayout, x: &[f64], z0: &[Complex64], cfg: &ExperimentConfig) -> Result<Self> {
        let policy = layout.decode(x)?;
        let DecodedPolicy::Swarm(spec) = &policy else {
            unreachable!("Gaussian policies use swarm layouts")
        };
        let end = evolve(&policy, z0, &cfg.rollout)?;
        Ok(GaussianSwarmPolicy {
            x: x.to_vec(),
            swarm: spec.record(),
            initial_points: z0.iter().map(|z| [z.re, z.im]).collect(),
            final_points: end.iter().map(|z| [z.re, z.im]).collect(),
            distributions: to_gaussians(&end)?,
        })
    }

    /// Number of distributions whose mean is within [`FREE_MEAN`] of zero.
    pub fn free_jumps(&self) -> usize {
        self.distributions.iter().filter(|g| g.m.abs() < FREE_MEAN).count()
    }
}

#[derive(Debug, Clone)]
pub struct FrogRun {
    pub training: Training,
    pub initial_points: Vec<Complex64>,
    pub policy: GaussianSwarmPolicy,
    /// Average reward of the final policy over fresh rollouts.
    pub final_reward: f64,
    pub final_reward_sd: f64,
}

fn rollouts(dists: &[GaussianParams], env: &FrogConfig, n: usize, rng: &mut RngHandle) -> Vec<f64> {
    (0..n).map(|_| frog_reward(&sample_gaussians(dists, rng), env)).collect()
}

/// Policy of parameter vector `x` with the mean and standard deviation of its
/// reward over `n` rollouts.
pub fn score_policy(
    cfg: &ExperimentConfig,
    env: &FrogConfig,
    x: &[f64],
    z0: &[Complex64],
    n: usize,
    rng: &RngHandle,
) -> Result<(GaussianSwarmPolicy, f64, f64)> {
    let policy = GaussianSwarmPolicy::build(&PolicyLayout::FullSwarm { n: FROG_POINTS }, x, z0, cfg)?;
    let (m, v) = mean_var(&rollouts(&policy.distributions, env, n, &mut rng.clone()));
    Ok((policy, m, v.sqrt()))
}

/// Seeded initial points of a frog experiment.
pub fn frog_initial_points(cfg: &ExperimentConfig) -> Result<Vec<Complex64>> {
    initial_points(FROG_POINTS, cfg.rollout.initial_shape, &mut Streams::new(cfg.seed).init)
}

/// Trains the five-jump frog policy.
pub fn run_frog(cfg: &ExperimentConfig, env: &FrogConfig) -> Result<FrogRun> {
    env.validate()?;
    let streams = Streams::new(cfg.seed);
    let z0 = frog_initial_points(cfg)?;
    let layout = PolicyLayout::FullSwarm { n: FROG_POINTS };
    let score = |x: &[f64], rng: &mut RngHandle| -> f64 {
        let Ok(policy) = layout.decode(x) else {
            return f64::NEG_INFINITY;
        };
        let Ok(dists) = evolve(&policy, &z0, &cfg.rollout).and_then(|end| to_gaussians(&end)) else {
            return f64::NEG_INFINITY;
        };
        mean_var(&rollouts(&dists, env, cfg.rollout.evaluations, rng)).0
    };
    let training = train(cfg, layout.dim(), Direction::Maximize, score, cfg.cmaes.target, &streams.optimize, |_, _| {})?;

    // the better of the best candidate and the search mean on common samples
    let mut chosen: Option<(GaussianSwarmPolicy, f64, f64)> = None;
    for x in [&training.best_x, &training.final_mean] {
        let scored = score_policy(cfg, env, x, &z0, cfg.rollout.final_rollouts, &streams.final_eval)?;
        if chosen.as_ref().is_none_or(|c| scored.1 > c.1) {
            chosen = Some(scored);
        }
    }
    let (policy, final_reward, final_reward_sd) = chosen.expect("two candidates were scored");
    Ok(FrogRun {
        training,
        initial_points: z0,
        policy,
        final_reward,
        final_reward_sd,
    })
}

pub(crate) fn report(cfg: &ExperimentConfig, run: &FrogRun) -> Result<RunReport> {
    let layout = PolicyLayout::FullSwarm { n: FROG_POINTS };
    let traj = trajectory(&layout.decode(&run.policy.x)?, &run.initial_points, &cfg.rollout)?;
    let converged = cfg.cmaes.target.map(|t| Direction::Maximize.reached(run.final_reward, t));
    Ok(RunReport {
        records: run.training.records.clone(),
        policy: serde_json::json!({
            "policy": run.policy,
            "free_jumps": run.policy.free_jumps(),
            "final_reward": run.final_reward,
            "final_reward_sd": run.final_reward_sd,
        }),
        snapshots: Snapshot::from_trajectory(&traj, cfg.rollout.horizon, &[("frog", FROG_POINTS)]),
        trajectory: Some(traj),
        path: None,
        converged,
        summary: format!(
            "final reward {:.4} (sd {:.4}), {} free jumps",
            run.final_reward,
            run.final_reward_sd,
            run.policy.free_jumps()
        ),
    })
}
