use num_complex::Complex64;

use super::config::ExperimentConfig;
use super::rollout::{
    chain_trajectory, evolve, evolve_chain, initial_points, train, trajectory, Direction, Streams, Training,
};
use super::{RunReport, Snapshot};
use crate::dist::{RngHandle, WrappedCauchy};
use crate::envs::layout::{DecodedPolicy, PolicyLayout};
use crate::envs::{labyrinth_path, labyrinth_reward, LabyrinthConfig};
use crate::error::{Error, Result};
use crate::geom::{reduce_angle, DiscPoint};
use crate::stats::mean_var;
use crate::swarm::Trajectory;

/// Oscillators of both labyrinth policies.
pub const CHAIN_LENGTH: usize = 10;

/// Policy points at least this far out count as nearly deterministic.
pub const NEAR_BOUNDARY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Step angles are the final phases of a Kuramoto chain.
    Phases,
    /// Step angles are drawn from wrapped Cauchy laws at the final points of a
    /// chain-coupled swarm.
    WrappedCauchy,
}

impl Method {
    fn layout(self) -> PolicyLayout {
        match self {
            Method::Phases => PolicyLayout::KuramotoChain { n: CHAIN_LENGTH },
            Method::WrappedCauchy => PolicyLayout::PoincareChain { n: CHAIN_LENGTH },
        }
    }
}

#[derive(Debug, Clone)]
pub enum LabyrinthStart {
    Phases(Vec<f64>),
    Points(Vec<Complex64>),
}

#[derive(Debug, Clone)]
pub struct LabyrinthRun {
    pub method: Method,
    pub training: Training,
    /// Parameters of the final policy.
    pub x: Vec<f64>,
    pub start: LabyrinthStart,
    /// Mean and standard deviation of the final policy's reward over the
    /// final rollouts; the deviation is zero for the phase method.
    pub final_reward: f64,
    pub final_reward_sd: f64,
    /// Final phases (phase method) or the mode of each step law.
    pub final_angles: Vec<f64>,
    /// Final policy points of the wrapped Cauchy method.
    pub final_points: Option<Vec<Complex64>>,
}

impl LabyrinthRun {
    /// Best reward of the first generation.
    pub fn initial_reward(&self) -> f64 {
        self.training.records.first().map_or(f64::NAN, |r| r.best)
    }
}

fn step_laws(points: &[Complex64]) -> Result<Vec<WrappedCauchy>> {
    points.iter().map(|&z| Ok(WrappedCauchy::new(DiscPoint::from_complex(z)?))).collect()
}

fn sample_walk(laws: &[WrappedCauchy], env: &LabyrinthConfig, rng: &mut RngHandle) -> f64 {
    let angles: Vec<f64> = laws.iter().map(|l| l.sample(rng)).collect();
    labyrinth_reward(&angles, env).expect("one law per step")
}

/// Mean and standard deviation of the reward of `n` walks with uniformly
/// random step angles.
pub fn labyrinth_baseline(env: &LabyrinthConfig, n: usize, rng: &mut RngHandle) -> (f64, f64) {
    let (m, v) = mean_var(&random_walks(env, n, rng));
    (m, v.sqrt())
}

/// Best reward among `n` walks with uniformly random step angles.
pub fn random_search_best(env: &LabyrinthConfig, n: usize, rng: &mut RngHandle) -> f64 {
    random_walks(env, n, rng).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn random_walks(env: &LabyrinthConfig, n: usize, rng: &mut RngHandle) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let angles: Vec<f64> = (0..env.n_steps).map(|_| rng.angle()).collect();
            labyrinth_reward(&angles, env).expect("n_steps angles")
        })
        .collect()
}

fn check_env(env: &LabyrinthConfig) -> Result<()> {
    env.validate()?;
    if env.n_steps != CHAIN_LENGTH {
        return Err(Error::config(format!(
            "labyrinth policies take {CHAIN_LENGTH} steps, the environment asks for {}",
            env.n_steps
        )));
    }
    Ok(())
}

/// Trains a labyrinth policy with either method.
pub fn run_labyrinth(cfg: &ExperimentConfig, env: &LabyrinthConfig, method: Method) -> Result<LabyrinthRun> {
    check_env(env)?;
    match method {
        Method::Phases => run_phases(cfg, env),
        Method::WrappedCauchy => run_wrapped_cauchy(cfg, env),
    }
}

fn final_phases(x: &[f64], phi0: &[f64], cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let DecodedPolicy::Kuramoto(spec) = Method::Phases.layout().decode(x)? else {
        unreachable!("chain layout decodes to a Kuramoto chain")
    };
    Ok(evolve_chain(&spec, phi0, &cfg.rollout)?.into_iter().map(reduce_angle).collect())
}

fn run_phases(cfg: &ExperimentConfig, env: &LabyrinthConfig) -> Result<LabyrinthRun> {
    let streams = Streams::new(cfg.seed);
    let mut init = streams.init.clone();
    let phi0: Vec<f64> = (0..CHAIN_LENGTH).map(|_| init.angle()).collect();
    let score = |x: &[f64], _: &mut RngHandle| -> f64 {
        final_phases(x, &phi0, cfg)
            .and_then(|a| labyrinth_reward(&a, env))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let layout = Method::Phases.layout();
    let training = train(cfg, layout.dim(), Direction::Maximize, score, cfg.cmaes.target, &streams.optimize, |_, _| {})?;
    let x = training.best_x.clone();
    let final_angles = final_phases(&x, &phi0, cfg)?;
    let final_reward = labyrinth_reward(&final_angles, env)?;
    Ok(LabyrinthRun {
        method: Method::Phases,
        training,
        x,
        start: LabyrinthStart::Phases(phi0),
        final_reward,
        final_reward_sd: 0.0,
        final_angles,
        final_points: None,
    })
}

fn run_wrapped_cauchy(cfg: &ExperimentConfig, env: &LabyrinthConfig) -> Result<LabyrinthRun> {
    let streams = Streams::new(cfg.seed);
    let z0 = initial_points(CHAIN_LENGTH, cfg.rollout.initial_shape, &mut streams.init.clone())?;
    let layout = Method::WrappedCauchy.layout();
    let draws = cfg.rollout.samples * cfg.rollout.evaluations;
    let score = |x: &[f64], rng: &mut RngHandle| -> f64 {
        let Ok(laws) = layout.decode(x).and_then(|p| evolve(&p, &z0, &cfg.rollout)).and_then(|e| step_laws(&e)) else {
            return f64::NEG_INFINITY;
        };
        (0..draws).map(|_| sample_walk(&laws, env, rng)).sum::<f64>() / draws as f64
    };
    let training = train(cfg, layout.dim(), Direction::Maximize, score, cfg.cmaes.target, &streams.optimize, |_, _| {})?;

    // the better of the best candidate and the search mean on common samples
    let mut chosen: Option<(Vec<f64>, Vec<Complex64>, f64, f64)> = None;
    for x in [&training.best_x, &training.final_mean] {
        let end = evolve(&layout.decode(x)?, &z0, &cfg.rollout)?;
        let laws = step_laws(&end)?;
        let mut rng = streams.final_eval.clone();
        let rewards: Vec<f64> = (0..cfg.rollout.final_rollouts).map(|_| sample_walk(&laws, env, &mut rng)).collect();
        let (m, v) = mean_var(&rewards);
        if chosen.as_ref().is_none_or(|c| m > c.2) {
            chosen = Some((x.clone(), end, m, v.sqrt()));
        }
    }
    let (x, end, final_reward, final_reward_sd) = chosen.expect("two candidates were scored");
    Ok(LabyrinthRun {
        method: Method::WrappedCauchy,
        training,
        x,
        start: LabyrinthStart::Points(z0),
        final_reward,
        final_reward_sd,
        final_angles: end.iter().map(|z| reduce_angle(z.arg())).collect(),
        final_points: Some(end),
    })
}

pub(crate) fn report(cfg: &ExperimentConfig, env: &LabyrinthConfig, run: &LabyrinthRun) -> Result<RunReport> {
    let policy = run.method.layout().decode(&run.x)?;
    let (snapshots, traj, policy_json) = match (&run.start, &policy) {
        (LabyrinthStart::Phases(phi0), DecodedPolicy::Kuramoto(spec)) => {
            let traj = chain_trajectory(spec, phi0, &cfg.rollout)?;
            let on_circle = Trajectory {
                times: traj.times,
                states: traj.states.iter().map(|phi| phi.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()).collect(),
                boundary_corrections: 0,
            };
            let snaps = Snapshot::from_trajectory(&on_circle, cfg.rollout.horizon, &[("phases", CHAIN_LENGTH)]);
            let json = serde_json::json!({
                "method": "phases",
                "x": run.x,
                "omega": spec.omega(),
                "couplings": spec.couplings(),
                "initial_phases": phi0,
                "final_phases": run.final_angles,
                "reward": run.final_reward,
            });
            (snaps, on_circle, json)
        }
        (LabyrinthStart::Points(z0), DecodedPolicy::Swarm(spec)) => {
            let traj = trajectory(&policy, z0, &cfg.rollout)?;
            let snaps = Snapshot::from_trajectory(&traj, cfg.rollout.horizon, &[("policy", CHAIN_LENGTH)]);
            let end = run.final_points.as_deref().unwrap_or_default();
            let json = serde_json::json!({
                "method": "wrapped_cauchy",
                "x": run.x,
                "swarm": spec.record(),
                "initial_points": z0.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "final_points": end.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "modes": run.final_angles,
                "near_boundary": end.iter().filter(|z| z.norm() > NEAR_BOUNDARY).count(),
                "final_reward": run.final_reward,
                "final_reward_sd": run.final_reward_sd,
            });
            (snaps, traj, json)
        }
        _ => unreachable!("start state matches the method"),
    };
    let converged = cfg.cmaes.target.map(|t| Direction::Maximize.reached(run.final_reward, t));
    Ok(RunReport {
        records: run.training.records.clone(),
        policy: policy_json,
        snapshots,
        trajectory: Some(traj),
        path: Some((env.clone(), labyrinth_path(&run.final_angles, env))),
        converged,
        summary: format!(
            "final reward {:.4} (sd {:.4}), first generation {:.4}",
            run.final_reward,
            run.final_reward_sd,
            run.initial_reward()
        ),
    })
}
