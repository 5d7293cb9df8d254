//! The files under `configs/` are the code defaults written out. Run with
//! `HYPERSWARM_BLESS=1` to regenerate them after changing a default.

use std::path::{Path, PathBuf};

use hyperswarm::envs::multilayer::{reference_perturbation, reference_spec};
use hyperswarm::envs::{EnvConfig, FrogConfig, LabyrinthConfig, MultiLayerInstance, PlaneGameConfig, TwoFrogConfig};
use hyperswarm::runner::{ExperimentConfig, Problem};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped_multilayer() -> MultiLayerInstance {
    let (ga, gb) = reference_perturbation();
    MultiLayerInstance::from_spec(&reference_spec()).unwrap().transformed(&ga, &gb)
}

fn expected_envs() -> Vec<(&'static str, String)> {
    let frog = FrogConfig {
        free_jump_threshold: 0.2,
        ..FrogConfig::default()
    };
    vec![
        ("envs/frog.json", EnvConfig::Frog(frog).to_json()),
        ("envs/two_frogs.json", EnvConfig::TwoFrogs(TwoFrogConfig::default()).to_json()),
        ("envs/labyrinth.json", EnvConfig::Labyrinth(LabyrinthConfig::default()).to_json()),
        ("envs/plane_game.json", EnvConfig::PlaneGame(PlaneGameConfig::default()).to_json()),
        ("envs/multilayer.json", EnvConfig::Multilayer(shipped_multilayer()).to_json()),
        ("envs/multilayer.txt", shipped_multilayer().to_edge_list()),
    ]
}

fn experiment(problem: Problem) -> ExperimentConfig {
    let env = format!("../envs/{}.json", problem.env_kind());
    let mut cfg = ExperimentConfig::new(problem, 1, env);
    // noisy fitness: best-ever saturates long before the search distribution settles
    if matches!(problem, Problem::Frog | Problem::LabyrinthM2) {
        cfg.cmaes.stall_generations = None;
    }
    match problem {
        Problem::Frog => cfg.cmaes.lambda = Some(512),
        Problem::Multilayer => {
            cfg.cmaes.lambda = Some(32);
            cfg.cmaes.stall_generations = None;
            cfg.tie_break = true;
            cfg.cmaes.target = Some(-4.0);
        }
        Problem::LabyrinthM2 => {
            cfg.cmaes.lambda = Some(32);
            cfg.cmaes.sigma0 = 1.0;
            cfg.rollout.horizon = 4.0;
            cfg.rollout.samples = 10;
        }
        Problem::TwoFrogs | Problem::PlaneGame => {
            cfg.cmaes.lambda = Some(64);
            cfg.cmaes.sigma0 = 1.0;
            cfg.cmaes.stall_generations = None;
        }
        _ => {}
    }
    cfg
}

fn expected() -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = expected_envs().into_iter().map(|(p, s)| (p.to_string(), s)).collect();
    for p in Problem::ALL {
        files.push((format!("experiments/{}.json", p.name()), experiment(p).to_json()));
    }
    files
}

#[test]
fn shipped_files_match_code_defaults() {
    let dir = configs_dir();
    let bless = std::env::var_os("HYPERSWARM_BLESS").is_some();
    for (rel, text) in expected() {
        let path = dir.join(&rel);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(on_disk, text, "{rel} differs from the code default");
    }
}

#[test]
fn shipped_files_load() {
    let dir = configs_dir();
    for p in Problem::ALL {
        let cfg = ExperimentConfig::load(dir.join(format!("experiments/{}.json", p.name()))).unwrap();
        assert_eq!(cfg.problem, p);
        assert_eq!(cfg.load_env().unwrap().kind(), p.env_kind());
    }
    let from_text = EnvConfig::load(dir.join("envs/multilayer.txt")).unwrap();
    let from_json = EnvConfig::load(dir.join("envs/multilayer.json")).unwrap();
    let (EnvConfig::Multilayer(a), EnvConfig::Multilayer(b)) = (from_text, from_json) else {
        panic!("both files hold multi-layer instances")
    };
    assert_eq!(a.to_spec(), b.to_spec());
    assert_eq!(a.optimum(), -4);
}
