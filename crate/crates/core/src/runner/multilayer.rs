use std::sync::Mutex;

use num_complex::Complex64;

use super::config::ExperimentConfig;
use super::rollout::{evolve_exact, train, trajectory, Direction, Streams, Training};
use super::{RunReport, Snapshot};
use crate::envs::layout::{DecodedPolicy, PolicyLayout};
use crate::envs::multilayer::{FIXED_LAYER, MOVING_LAYERS};
use crate::envs::MultiLayerInstance;
use crate::error::{Error, Result};
use crate::swarm::verify_isometry;

#[derive(Debug, Clone)]
pub struct MultilayerRun {
    pub training: Training,
    /// Error of the best candidate.
    pub best_error: i64,
    pub optimum: i64,
    /// Largest change of a within-layer distance seen along the flows of the
    /// per-generation best candidates.
    pub max_drift: f64,
    pub layout: PolicyLayout,
    /// Evolved points of layers A and B under the best candidate.
    pub final_points: [Vec<Complex64>; 2],
    pub initial_points: Vec<Complex64>,
}

/// Error with the moving layers left where they are.
pub fn identity_error(inst: &MultiLayerInstance) -> i64 {
    let [a, b] = MOVING_LAYERS.map(|l| inst.layer_points(l).expect("validated instance has layers A and B"));
    inst.error_with_moving(&a, &b).expect("layer sizes match")
}

fn split(inst: &MultiLayerInstance, z: &[Complex64]) -> [Vec<Complex64>; 2] {
    let n_a = inst.layers()[inst.layer_index("A").expect("layer A")].points.len();
    [z[..n_a].to_vec(), z[n_a..].to_vec()]
}

/// Aligns layers A and B to layer C with a two-group sub-swarm.
///
/// Training stops once the error reaches the instance optimum.
pub fn run_multilayer(cfg: &ExperimentConfig, inst: &MultiLayerInstance) -> Result<MultilayerRun> {
    let [a, b] = MOVING_LAYERS.map(|l| inst.layer_points(l).expect("validated instance has layers A and B"));
    let layout = PolicyLayout::SubSwarm {
        sizes: vec![a.len(), b.len()],
    };
    let grouping: Vec<usize> = std::iter::repeat_n(0, a.len()).chain(std::iter::repeat_n(1, b.len())).collect();
    let z0: Vec<Complex64> = a.iter().chain(&b).copied().collect();
    let optimum = inst.optimum();
    let score = |x: &[f64], _: &mut crate::dist::RngHandle| -> f64 {
        let Ok(policy) = layout.decode(x) else {
            return f64::INFINITY;
        };
        let Ok(end) = evolve_exact(&policy, &z0, &cfg.rollout) else {
            return f64::INFINITY;
        };
        let [pa, pb] = split(inst, &end);
        let j = inst.error_with_moving(&pa, &pb).expect("layer sizes match") as f64;
        if cfg.tie_break {
            // squashed into [0, 1) so candidates of different error never swap
            let v = inst.violation_with_moving(&pa, &pb).expect("layer sizes match");
            j + v / (1.0 + v)
        } else {
            j
        }
    };
    let stop_at = Some(cfg.cmaes.target.map_or(optimum as f64, |t| t.max(optimum as f64)));
    let drift = Mutex::new(Ok(0.0f64));
    let streams = Streams::new(cfg.seed);
    let training = train(cfg, layout.dim(), Direction::Minimize, score, stop_at, &streams.optimize, |_, pop| {
        let best = pop
            .iter()
            .filter(|c| c.fitness.is_finite())
            .min_by(|p, q| p.fitness.total_cmp(&q.fitness));
        let Some(best) = best else { return };
        let mut slot = drift.lock().expect("drift lock");
        let Ok(worst) = *slot else { return };
        *slot = layout
            .decode(&best.x)
            .and_then(|p| trajectory(&p, &z0, &cfg.rollout))
            .map(|traj| worst.max(verify_isometry(&traj, &grouping)));
    })?;
    let max_drift = drift.into_inner().expect("drift lock")?;
    let end = evolve_exact(&layout.decode(&training.best_x)?, &z0, &cfg.rollout)?;
    let [pa, pb] = split(inst, &end);
    let best_error = inst.error_with_moving(&pa, &pb)?;
    if best_error as f64 != training.best_score.floor() {
        return Err(Error::param("re-evaluating the best candidate changed its error"));
    }
    Ok(MultilayerRun {
        training,
        best_error,
        optimum,
        max_drift,
        layout,
        final_points: [pa, pb],
        initial_points: z0,
    })
}

pub(crate) fn report(cfg: &ExperimentConfig, inst: &MultiLayerInstance, run: &MultilayerRun) -> Result<RunReport> {
    let policy = run.layout.decode(&run.training.best_x)?;
    let DecodedPolicy::SubSwarm(spec) = &policy else {
        unreachable!("multi-layer runs use a sub-swarm layout")
    };
    let traj = trajectory(&policy, &run.initial_points, &cfg.rollout)?;
    let fixed = inst.layer_points(FIXED_LAYER).expect("validated instance has layer C");
    let sizes = [run.final_points[0].len(), run.final_points[1].len()];
    let mut snapshots = Snapshot::from_trajectory(&traj, cfg.rollout.horizon, &[("A", sizes[0]), ("B", sizes[1])]);
    for s in &mut snapshots {
        s.groups.push((FIXED_LAYER.to_string(), fixed.clone()));
    }
    let layer_json = |name: &str, pts: &[Complex64]| {
        let l = &inst.layers()[inst.layer_index(name).expect("known layer")];
        let nodes: Vec<_> = l
            .ids
            .iter()
            .zip(pts)
            .map(|(id, z)| serde_json::json!({"id": id, "re": z.re, "im": z.im}))
            .collect();
        serde_json::json!({"name": name, "nodes": nodes})
    };
    let converged = cfg.cmaes.target.map(|t| Direction::Minimize.reached(run.best_error as f64, t));
    Ok(RunReport {
        records: run.training.records.clone(),
        policy: serde_json::json!({
            "x": run.training.best_x,
            "sub_swarm": spec.record(),
            "error": run.best_error,
            "optimum": run.optimum,
            "max_within_layer_drift": run.max_drift,
            "layers": [
                layer_json("A", &run.final_points[0]),
                layer_json("B", &run.final_points[1]),
                layer_json(FIXED_LAYER, &fixed),
            ],
        }),
        snapshots,
        trajectory: Some(traj),
        path: None,
        converged,
        summary: format!(
            "error {} (optimum {}), within-layer drift {:.3e}",
            run.best_error, run.optimum, run.max_drift
        ),
    })
}
