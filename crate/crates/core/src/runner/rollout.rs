//! Shared pieces of the training loops: initial points, swarm evolution and
//! the single-agent CMA-ES driver.

use std::time::Instant;

use num_complex::Complex64;

use super::config::{ExperimentConfig, RolloutSettings};
use super::TrainingRecord;
use crate::cmaes::{cmaes_optimize_observed, Candidate, OptimizeOptions};
use crate::dist::{gaussian_sample, ConformalNatural, RngHandle};
use crate::envs::layout::DecodedPolicy;
use crate::error::{Error, Result};
use crate::geom::{disc_to_gaussian, DiscPoint, GaussianParams};
use crate::swarm::{integrate, integrate_endpoint, Trajectory};
use crate::swarm::KuramotoChainSpec;

/// Independent random streams of one experiment.
pub(crate) struct Streams {
    pub init: RngHandle,
    pub optimize: RngHandle,
    pub final_eval: RngHandle,
    pub baseline: RngHandle,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let root = RngHandle::new(seed);
        Streams {
            init: root.substream(0),
            optimize: root.substream(1),
            final_eval: root.substream(2),
            baseline: root.substream(3),
        }
    }
}

/// `n` points drawn once per experiment from the conformally natural law
/// centred at the origin.
pub(crate) fn initial_points(n: usize, shape: f64, rng: &mut RngHandle) -> Result<Vec<Complex64>> {
    let law = ConformalNatural::new(DiscPoint::ORIGIN, shape)?;
    Ok((0..n).map(|_| law.sample(rng).to_complex()).collect())
}

fn disc_rhs(policy: &DecodedPolicy) -> Result<impl Fn(&Vec<Complex64>, &mut Vec<Complex64>) + '_> {
    if matches!(policy, DecodedPolicy::Kuramoto(_)) {
        return Err(Error::param("a phase chain does not move disc points"));
    }
    Ok(move |z: &Vec<Complex64>, out: &mut Vec<Complex64>| match policy {
        DecodedPolicy::Swarm(s) => s.velocity_into(z, out),
        DecodedPolicy::SubSwarm(s) => s.velocity_into(z, out),
        DecodedPolicy::Kuramoto(_) => unreachable!("rejected above"),
    })
}

/// Disc points after flowing for the rollout horizon.
pub(crate) fn evolve(policy: &DecodedPolicy, z0: &[Complex64], r: &RolloutSettings) -> Result<Vec<Complex64>> {
    integrate_endpoint(disc_rhs(policy)?, z0.to_vec(), 0.0, r.horizon, r.dt)
}

/// Like [`evolve`], but rejects a flow that had to be pulled back from the
/// boundary: its endpoint is no longer an isometric image of the start.
pub(crate) fn evolve_exact(policy: &DecodedPolicy, z0: &[Complex64], r: &RolloutSettings) -> Result<Vec<Complex64>> {
    let traj = integrate(disc_rhs(policy)?, z0.to_vec(), 0.0, r.horizon, r.dt, 0)?;
    if traj.boundary_corrections > 0 {
        return Err(Error::param("flow reached the disc boundary"));
    }
    Ok(traj.states.into_iter().next_back().expect("trajectory keeps its endpoint"))
}

/// Every integration step of the flow over the rollout horizon.
pub(crate) fn trajectory(
    policy: &DecodedPolicy,
    z0: &[Complex64],
    r: &RolloutSettings,
) -> Result<Trajectory<Vec<Complex64>>> {
    integrate(disc_rhs(policy)?, z0.to_vec(), 0.0, r.horizon, r.dt, 1)
}

pub(crate) fn chain_trajectory(
    spec: &KuramotoChainSpec,
    phi0: &[f64],
    r: &RolloutSettings,
) -> Result<Trajectory<Vec<f64>>> {
    integrate(|x: &Vec<f64>, out: &mut Vec<f64>| spec.velocity_into(x, out), phi0.to_vec(), 0.0, r.horizon, r.dt, 1)
}

pub(crate) fn evolve_chain(spec: &KuramotoChainSpec, phi0: &[f64], r: &RolloutSettings) -> Result<Vec<f64>> {
    integrate_endpoint(
        |x: &Vec<f64>, out: &mut Vec<f64>| spec.velocity_into(x, out),
        phi0.to_vec(),
        0.0,
        r.horizon,
        r.dt,
    )
}

pub(crate) fn to_gaussians(points: &[Complex64]) -> Result<Vec<GaussianParams>> {
    points
        .iter()
        .map(|&z| Ok(disc_to_gaussian(DiscPoint::from_complex(z)?)))
        .collect()
}

pub(crate) fn sample_gaussians(params: &[GaussianParams], rng: &mut RngHandle) -> Vec<f64> {
    params
        .iter()
        .map(|p| gaussian_sample(p, rng).expect("disc-derived variances are positive"))
        .collect()
}

/// Snapshot times: start, middle and end of the horizon.
pub(crate) fn snapshot_times(horizon: f64) -> [f64; 3] {
    [0.0, 0.5 * horizon, horizon]
}

/// Whether the problem's score is a reward to raise or an error to lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    fn cost(self, score: f64) -> f64 {
        match self {
            Direction::Maximize => -score,
            Direction::Minimize => score,
        }
    }

    pub fn reached(self, score: f64, target: f64) -> bool {
        match self {
            Direction::Maximize => score >= target,
            Direction::Minimize => score <= target,
        }
    }
}

/// Outcome of a single-agent training run.
#[derive(Debug, Clone)]
pub struct Training {
    pub records: Vec<TrainingRecord>,
    /// Best candidate ever evaluated and its score.
    pub best_x: Vec<f64>,
    pub best_score: f64,
    /// CMA-ES mean after the last update.
    pub final_mean: Vec<f64>,
    pub stop_reached: bool,
}

/// Runs CMA-ES on `score` from the zero vector.
///
/// Non-finite scores (diverged rollouts) rank last. `stop_at` ends training as
/// soon as a candidate reaches it; `observe` sees every generation with
/// scores in problem units.
pub(crate) fn train<F, O>(
    cfg: &ExperimentConfig,
    dim: usize,
    direction: Direction,
    score: F,
    stop_at: Option<f64>,
    rng: &RngHandle,
    mut observe: O,
) -> Result<Training>
where
    F: Fn(&[f64], &mut RngHandle) -> f64 + Sync,
    O: FnMut(usize, &[Candidate]),
{
    let opts = OptimizeOptions {
        lambda: cfg.cmaes.lambda,
        max_generations: cfg.cmaes.max_generations,
        target: stop_at.map(|t| direction.cost(t)),
        stall_generations: cfg.cmaes.stall_generations,
        stall_tolerance: cfg.cmaes.stall_tolerance,
        parallel: true,
        progress: false,
    };
    let objective = |x: &[f64], rng: &mut RngHandle| {
        let c = direction.cost(score(x, rng));
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    };
    let start = Instant::now();
    let mut records = Vec::new();
    let result = cmaes_optimize_observed(objective, &vec![0.0; dim], cfg.cmaes.sigma0, &opts, rng, |stats, pop| {
        let record = TrainingRecord {
            generation: stats.generation,
            best: direction.cost(stats.best_ever),
            mean: direction.cost(stats.mean),
            player: None,
            elapsed: start.elapsed(),
        };
        log::info!(
            "{} gen {:>4}  best {:>10.4}  mean {:>10.4}  sigma {:.3e}",
            cfg.problem.name(),
            record.generation,
            record.best,
            record.mean,
            stats.sigma
        );
        records.push(record);
        observe(stats.generation, pop);
    })?;
    Ok(Training {
        records,
        best_score: direction.cost(result.best.fitness),
        best_x: result.best.x,
        final_mean: result.final_state.mean().to_vec(),
        stop_reached: result.target_reached,
    })
}
