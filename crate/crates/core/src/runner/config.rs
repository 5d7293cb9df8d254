use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::envs::{parse_body, unwrap_versioned, versioned_json, EnvConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Frog,
    Multilayer,
    LabyrinthM1,
    LabyrinthM2,
    TwoFrogs,
    PlaneGame,
}

impl Problem {
    pub const ALL: [Problem; 6] = [
        Problem::Frog,
        Problem::Multilayer,
        Problem::LabyrinthM1,
        Problem::LabyrinthM2,
        Problem::TwoFrogs,
        Problem::PlaneGame,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Frog => "frog",
            Problem::Multilayer => "multilayer",
            Problem::LabyrinthM1 => "labyrinth_m1",
            Problem::LabyrinthM2 => "labyrinth_m2",
            Problem::TwoFrogs => "two_frogs",
            Problem::PlaneGame => "plane_game",
        }
    }

    pub fn from_name(name: &str) -> Option<Problem> {
        Problem::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Environment kind the problem trains on.
    pub fn env_kind(self) -> &'static str {
        match self {
            Problem::Frog => "frog",
            Problem::Multilayer => "multilayer",
            Problem::LabyrinthM1 | Problem::LabyrinthM2 => "labyrinth",
            Problem::TwoFrogs => "two_frogs",
            Problem::PlaneGame => "plane_game",
        }
    }

    pub fn is_two_player(self) -> bool {
        matches!(self, Problem::TwoFrogs | Problem::PlaneGame)
    }

    /// Default settings for the problem.
    pub fn defaults(self) -> (CmaesSettings, RolloutSettings) {
        let cmaes = CmaesSettings {
            lambda: None,
            sigma0: 0.5,
            max_generations: 300,
            target: None,
            stall_generations: Some(30),
            stall_tolerance: 1e-6,
        };
        let rollout = RolloutSettings {
            horizon: 2.0,
            dt: 0.01,
            samples: 1,
            evaluations: 10,
            initial_shape: 2.0,
            final_rollouts: 1000,
        };
        match self {
            Problem::Frog => (CmaesSettings { sigma0: 1.0, ..cmaes }, rollout),
            Problem::Multilayer => (
                CmaesSettings {
                    max_generations: 500,
                    ..cmaes
                },
                RolloutSettings {
                    horizon: 4.0,
                    evaluations: 1,
                    final_rollouts: 1,
                    ..rollout
                },
            ),
            Problem::LabyrinthM1 => (
                cmaes,
                RolloutSettings {
                    horizon: 1.0,
                    evaluations: 1,
                    final_rollouts: 1,
                    ..rollout
                },
            ),
            Problem::LabyrinthM2 => (
                cmaes,
                RolloutSettings {
                    horizon: 1.0,
                    samples: 5,
                    evaluations: 1,
                    ..rollout
                },
            ),
            Problem::TwoFrogs => (CmaesSettings { max_generations: 500, ..cmaes }, rollout),
            Problem::PlaneGame => (cmaes, rollout),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmaesSettings {
    /// Population size; the standard default when absent.
    pub lambda: Option<usize>,
    pub sigma0: f64,
    pub max_generations: usize,
    /// Score at which training stops and counts as converged: a reward to
    /// reach, or for the multi-layer problem an error to get down to.
    pub target: Option<f64>,
    /// Stop once the best-ever reward has improved by less than
    /// `stall_tolerance` over this many generations.
    pub stall_generations: Option<usize>,
    pub stall_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutSettings {
    /// Swarm integration horizon T.
    pub horizon: f64,
    pub dt: f64,
    /// Action samples drawn per evaluation and averaged.
    pub samples: usize,
    /// Evaluations averaged into one fitness value.
    pub evaluations: usize,
    /// Shape `s` of the conformally natural law of the initial points.
    pub initial_shape: f64,
    /// Rollouts used to score the final policy.
    pub final_rollouts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// One player updates while the other is frozen, then they swap.
    #[default]
    Alternating,
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub seed: u64,
    /// Environment file, relative paths resolved against the experiment file.
    pub env: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub cmaes: CmaesSettings,
    pub rollout: RolloutSettings,
    #[serde(default)]
    pub schedule: Schedule,
    /// Per-player seeds of two-player games; derived from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player_seeds: Option<[u64; 2]>,
    /// Multi-layer only: rank candidates of equal error by their distance
    /// violation, so the search can move across plateaus of the error.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie_break: bool,
}

/// Partially specified experiment file: missing sections take the problem
/// defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    seed: u64,
    env: PathBuf,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    cmaes: Option<Value>,
    #[serde(default)]
    rollout: Option<Value>,
    #[serde(default)]
    schedule: Schedule,
    #[serde(default)]
    player_seeds: Option<[u64; 2]>,
    #[serde(default)]
    tie_break: bool,
}

/// Overlays the keys present in `patch` on `base`, rejecting unknown keys.
fn overlay<T>(base: &T, patch: Option<Value>, origin: &str) -> Result<T>
where
    T: Clone + Serialize + serde::de::DeserializeOwned,
{
    let Some(patch) = patch else {
        return Ok(base.clone());
    };
    let Value::Object(patch) = patch else {
        return Err(Error::config(format!("{origin}: settings sections must be objects")));
    };
    let mut merged = serde_json::to_value(base).expect("settings serialize");
    let Value::Object(fields) = &mut merged else {
        unreachable!("settings serialize to objects")
    };
    for (k, v) in patch {
        if !fields.contains_key(&k) {
            return Err(Error::config(format!("{origin}: unknown setting {k:?}")));
        }
        fields.insert(k, v);
    }
    parse_body(merged, origin)
}

impl ExperimentConfig {
    /// Default experiment for `problem` reading the environment at `env`.
    pub fn new(problem: Problem, seed: u64, env: impl Into<PathBuf>) -> Self {
        let (cmaes, rollout) = problem.defaults();
        ExperimentConfig {
            problem,
            seed,
            env: env.into(),
            output_dir: None,
            cmaes,
            rollout,
            schedule: Schedule::default(),
            player_seeds: None,
            tie_break: false,
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })?;
        let (name, body) = unwrap_versioned(value, "problem", origin)?;
        let problem =
            Problem::from_name(&name).ok_or_else(|| Error::config(format!("{origin}: unknown problem {name:?}")))?;
        let file: ExperimentFile = parse_body(body, origin)?;
        let (cmaes, rollout) = problem.defaults();
        let cfg = ExperimentConfig {
            problem,
            seed: file.seed,
            env: file.env,
            output_dir: file.output_dir,
            cmaes: overlay(&cmaes, file.cmaes, origin)?,
            rollout: overlay(&rollout, file.rollout, origin)?,
            schedule: file.schedule,
            player_seeds: file.player_seeds,
            tie_break: file.tie_break,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads an experiment file and makes its relative paths absolute with
    /// respect to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.env.is_relative() {
            cfg.env = base.join(&cfg.env);
        }
        if let Some(out) = &cfg.output_dir {
            if out.is_relative() {
                cfg.output_dir = Some(base.join(out));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut body = serde_json::to_value(self).expect("experiment config serializes");
        if let Value::Object(map) = &mut body {
            map.shift_remove("problem");
        }
        versioned_json("problem", self.problem.name(), body)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cmaes;
        let r = &self.rollout;
        if !(c.sigma0 > 0.0) || !c.sigma0.is_finite() {
            return Err(Error::config("sigma0 must be positive"));
        }
        if c.max_generations == 0 {
            return Err(Error::config("max_generations must be positive"));
        }
        if c.lambda.is_some_and(|l| l < 2) {
            return Err(Error::config("lambda must be at least 2"));
        }
        if c.stall_generations == Some(0) || !(c.stall_tolerance >= 0.0) {
            return Err(Error::config("stall settings must be positive"));
        }
        if c.target.is_some_and(|t| !t.is_finite()) {
            return Err(Error::config("target must be finite"));
        }
        if !(r.horizon > 0.0) || !r.horizon.is_finite() || !(r.dt > 0.0) || !r.dt.is_finite() {
            return Err(Error::config("horizon and dt must be positive"));
        }
        if r.samples == 0 || r.evaluations == 0 || r.final_rollouts == 0 {
            return Err(Error::config("samples, evaluations and final_rollouts must be positive"));
        }
        if !(r.initial_shape > 1.0) {
            return Err(Error::config("initial_shape must exceed 1"));
        }
        if self.player_seeds.is_some() && !self.problem.is_two_player() {
            return Err(Error::config("player_seeds only applies to two-player games"));
        }
        if self.tie_break && self.problem != Problem::Multilayer {
            return Err(Error::config("tie_break only applies to the multilayer problem"));
        }
        Ok(())
    }

    /// Loads and checks the environment named by the experiment.
    pub fn load_env(&self) -> Result<EnvConfig> {
        let env = EnvConfig::load(&self.env)?;
        if env.kind() != self.problem.env_kind() {
            return Err(Error::config(format!(
                "problem {} needs a {} environment, {} holds {}",
                self.problem.name(),
                self.problem.env_kind(),
                self.env.display(),
                env.kind()
            )));
        }
        Ok(env)
    }
}
