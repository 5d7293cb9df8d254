//! Independent learners coupled only through a shared reward.

use std::time::Instant;

use num_complex::Complex64;

use super::config::{ExperimentConfig, Schedule};
use super::frog::GaussianSwarmPolicy;
use super::rollout::{evolve, initial_points, sample_gaussians, to_gaussians, trajectory, Streams};
use super::{RunReport, Snapshot, TrainingRecord};
use crate::cmaes::{evaluate_population, CmaesState};
use crate::dist::RngHandle;
use crate::envs::layout::PolicyLayout;
use crate::envs::{plane_game_rewards, two_frog_rewards, EnvConfig, PlaneGameConfig, TwoFrogConfig};
use crate::error::{Error, Result};
use crate::geom::GaussianParams;
use crate::stats::mean_var;
use crate::swarm::Trajectory;

/// Oscillators, and therefore numbers drawn per rollout, of each player.
pub const PLAYER_POINTS: usize = 3;

pub const PLAYER_NAMES: [&str; 2] = ["a", "b"];

#[derive(Debug, Clone, Copy)]
enum Game<'a> {
    Frogs(&'a TwoFrogConfig),
    Plane(&'a PlaneGameConfig),
}

impl<'a> Game<'a> {
    fn from_env(env: &'a EnvConfig) -> Result<Self> {
        match env {
            EnvConfig::TwoFrogs(c) => {
                c.validate()?;
                Ok(Game::Frogs(c))
            }
            EnvConfig::PlaneGame(c) => {
                c.validate()?;
                Ok(Game::Plane(c))
            }
            other => Err(Error::config(format!("{} is not a two-player game", other.kind()))),
        }
    }

    fn play(self, a: &[f64], b: &[f64]) -> (f64, f64) {
        match self {
            Game::Frogs(c) => two_frog_rewards(a, b, c).expect("both players draw the same count"),
            Game::Plane(c) => {
                let arr = |v: &[f64]| -> [f64; 3] { v.try_into().expect("three numbers per player") };
                plane_game_rewards(&arr(a), &arr(b), c)
            }
        }
    }
}

fn layout() -> PolicyLayout {
    PolicyLayout::FullSwarm { n: PLAYER_POINTS }
}

fn distributions(x: &[f64], z0: &[Complex64], cfg: &ExperimentConfig) -> Result<Vec<GaussianParams>> {
    to_gaussians(&evolve(&layout().decode(x)?, z0, &cfg.rollout)?)
}

/// Mean reward of `player` over `n` joint rollouts against a fixed opponent.
///
/// Rollout `e` draws the player's own numbers from `rng.substream(e)`'s
/// first substream and the opponent's from its second, so both players see
/// the same noise when their roles are mirrored.
fn own_reward(game: Game, player: usize, own: &[GaussianParams], other: &[GaussianParams], n: usize, rng: &RngHandle) -> f64 {
    let total: f64 = (0..n as u64)
        .map(|e| {
            let r = rng.substream(e);
            let mine = sample_gaussians(own, &mut r.substream(0));
            let theirs = sample_gaussians(other, &mut r.substream(1));
            if player == 0 {
                game.play(&mine, &theirs).0
            } else {
                game.play(&theirs, &mine).1
            }
        })
        .sum();
    total / n as f64
}

fn joint_rewards(game: Game, dists: [&[GaussianParams]; 2], n: usize, rng: &RngHandle) -> Vec<(f64, f64)> {
    (0..n as u64)
        .map(|e| {
            let r = rng.substream(e);
            let a = sample_gaussians(dists[0], &mut r.substream(0));
            let b = sample_gaussians(dists[1], &mut r.substream(1));
            game.play(&a, &b)
        })
        .collect()
}

/// Mean rewards of both players over `n` joint rollouts of the policies `xs`
/// started from the experiment's seeded points.
pub fn score_joint(cfg: &ExperimentConfig, env: &EnvConfig, xs: [&[f64]; 2], n: usize, rng: &RngHandle) -> Result<[f64; 2]> {
    let game = Game::from_env(env)?;
    let z0 = player_initial_points(cfg)?;
    let d = [distributions(xs[0], &z0[0], cfg)?, distributions(xs[1], &z0[1], cfg)?];
    let rewards = joint_rewards(game, [&d[0], &d[1]], n, rng);
    Ok([
        rewards.iter().map(|r| r.0).sum::<f64>() / n as f64,
        rewards.iter().map(|r| r.1).sum::<f64>() / n as f64,
    ])
}

/// Seeded initial points of both players.
pub fn player_initial_points(cfg: &ExperimentConfig) -> Result<[Vec<Complex64>; 2]> {
    let mut all = initial_points(2 * PLAYER_POINTS, cfg.rollout.initial_shape, &mut Streams::new(cfg.seed).init)?;
    let b = all.split_off(PLAYER_POINTS);
    Ok([all, b])
}

#[derive(Debug, Clone)]
pub struct TwoPlayerRun {
    /// Two rows per generation, player a then player b.
    pub records: Vec<TrainingRecord>,
    pub initial_points: [Vec<Complex64>; 2],
    /// Final search means of both players.
    pub policies: [GaussianSwarmPolicy; 2],
    /// Mean rewards of the final joint policy over the final rollouts.
    pub final_rewards: [f64; 2],
    pub final_reward_sd: [f64; 2],
}

/// Trains both players from the experiment's seeded initial points.
pub fn run_two_player(cfg: &ExperimentConfig, env: &EnvConfig) -> Result<TwoPlayerRun> {
    run_two_player_from(cfg, env, player_initial_points(cfg)?)
}

/// Trains both players from the given initial points.
///
/// In each generation a player samples a population and scores every
/// candidate against the opponent's current search mean. The alternating
/// schedule updates player a first and lets player b respond to a's new mean;
/// the simultaneous schedule scores both against the means from before the
/// generation.
pub fn run_two_player_from(cfg: &ExperimentConfig, env: &EnvConfig, z0: [Vec<Complex64>; 2]) -> Result<TwoPlayerRun> {
    cfg.validate()?;
    let game = Game::from_env(env)?;
    if z0.iter().any(|z| z.len() != PLAYER_POINTS) {
        return Err(Error::param(format!("each player starts from {PLAYER_POINTS} points")));
    }
    let streams = Streams::new(cfg.seed);
    let root = crate::dist::RngHandle::new(cfg.seed);
    let rngs: [RngHandle; 2] = match cfg.player_seeds {
        Some(s) => s.map(RngHandle::new),
        None => [root.substream(10), root.substream(11)],
    };
    let dim = layout().dim();
    let mut states = [
        CmaesState::new(&vec![0.0; dim], cfg.cmaes.sigma0, cfg.cmaes.lambda)?,
        CmaesState::new(&vec![0.0; dim], cfg.cmaes.sigma0, cfg.cmaes.lambda)?,
    ];
    let mut best_ever = [f64::NEG_INFINITY; 2];
    let mut records = Vec::with_capacity(2 * cfg.cmaes.max_generations);
    let start = Instant::now();

    for g in 0..cfg.cmaes.max_generations as u64 {
        let frozen = [states[0].mean().to_vec(), states[1].mean().to_vec()];
        for p in 0..2 {
            let q = 1 - p;
            let opponent = match cfg.schedule {
                Schedule::Alternating => states[q].mean().to_vec(),
                Schedule::Simultaneous => frozen[q].clone(),
            };
            let other = distributions(&opponent, &z0[q], cfg)?;
            let mut pop = states[p].ask(&mut rngs[p].substream(2 * g));
            let objective = |x: &[f64], rng: &mut RngHandle| -> f64 {
                match distributions(x, &z0[p], cfg) {
                    Ok(own) => -own_reward(game, p, &own, &other, cfg.rollout.evaluations, rng),
                    Err(_) => f64::INFINITY,
                }
            };
            evaluate_population(&mut pop, &rngs[p].substream(2 * g + 1), &objective, true);
            for c in &mut pop {
                if c.fitness.is_nan() {
                    c.fitness = f64::INFINITY;
                }
            }
            let scores: Vec<f64> = pop.iter().map(|c| -c.fitness).filter(|s| s.is_finite()).collect();
            let gen_best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            best_ever[p] = best_ever[p].max(gen_best);
            let record = TrainingRecord {
                generation: g as usize,
                best: best_ever[p],
                mean: if scores.is_empty() { f64::NEG_INFINITY } else { mean_var(&scores).0 },
                player: Some(PLAYER_NAMES[p].to_string()),
                elapsed: start.elapsed(),
            };
            log::info!(
                "{} gen {:>4} player {}  best {:>8.4}  mean {:>8.4}  sigma {:.3e}",
                cfg.problem.name(),
                g,
                PLAYER_NAMES[p],
                record.best,
                record.mean,
                states[p].sigma()
            );
            records.push(record);
            states[p].tell(&pop)?;
        }
    }

    let xs = [states[0].mean().to_vec(), states[1].mean().to_vec()];
    let policies = [
        GaussianSwarmPolicy::build(&layout(), &xs[0], &z0[0], cfg)?,
        GaussianSwarmPolicy::build(&layout(), &xs[1], &z0[1], cfg)?,
    ];
    let rewards = joint_rewards(
        game,
        [&policies[0].distributions, &policies[1].distributions],
        cfg.rollout.final_rollouts,
        &streams.final_eval,
    );
    let (ma, va) = mean_var(&rewards.iter().map(|r| r.0).collect::<Vec<_>>());
    let (mb, vb) = mean_var(&rewards.iter().map(|r| r.1).collect::<Vec<_>>());
    Ok(TwoPlayerRun {
        records,
        initial_points: z0,
        policies,
        final_rewards: [ma, mb],
        final_reward_sd: [va.sqrt(), vb.sqrt()],
    })
}

pub(crate) fn report(cfg: &ExperimentConfig, run: &TwoPlayerRun) -> Result<RunReport> {
    let trajs = [
        trajectory(&layout().decode(&run.policies[0].x)?, &run.initial_points[0], &cfg.rollout)?,
        trajectory(&layout().decode(&run.policies[1].x)?, &run.initial_points[1], &cfg.rollout)?,
    ];
    // both flows use the same step grid
    let joint = Trajectory {
        times: trajs[0].times.clone(),
        states: trajs[0]
            .states
            .iter()
            .zip(&trajs[1].states)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect(),
        boundary_corrections: trajs[0].boundary_corrections + trajs[1].boundary_corrections,
    };
    let snapshots = Snapshot::from_trajectory(&joint, cfg.rollout.horizon, &[("a", PLAYER_POINTS), ("b", PLAYER_POINTS)]);
    let converged = cfg
        .cmaes
        .target
        .map(|t| run.final_rewards.iter().all(|&r| r >= t));
    Ok(RunReport {
        records: run.records.clone(),
        policy: serde_json::json!({
            "players": {
                "a": {"policy": run.policies[0], "final_reward": run.final_rewards[0], "final_reward_sd": run.final_reward_sd[0]},
                "b": {"policy": run.policies[1], "final_reward": run.final_rewards[1], "final_reward_sd": run.final_reward_sd[1]},
            },
            "schedule": cfg.schedule,
        }),
        snapshots,
        trajectory: Some(joint),
        path: None,
        converged,
        summary: format!(
            "final rewards a {:.4} (sd {:.4}), b {:.4} (sd {:.4})",
            run.final_rewards[0], run.final_reward_sd[0], run.final_rewards[1], run.final_reward_sd[1]
        ),
    })
}
