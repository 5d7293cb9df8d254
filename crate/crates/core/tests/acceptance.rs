//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are printed even when
//! everything passes. Exits non-zero if any criterion fails that is not in
//! [`KNOWN_FAILURES`], or if a known failure starts passing.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use hyperswarm::cmaes::{cmaes_optimize, CmaesState, OptimizeOptions};
use hyperswarm::dist::{gaussian_sample, ConformalNatural, RngHandle, WrappedCauchy};
use hyperswarm::envs::{plane_game_rewards, EnvConfig};
use hyperswarm::geom::{disc_to_gaussian, gaussian_to_disc, hyp_distance, DiscPoint, GaussianParams, MobiusTransform};
use hyperswarm::runner::labyrinth::random_search_best;
use hyperswarm::runner::{self, output, run_frog, run_labyrinth, run_multilayer, run_two_player, ExperimentConfig, Method};
use hyperswarm::stats::{ks_uniform, standard_normal_cdf};
use hyperswarm::swarm::{cross_group_change, integrate, verify_isometry, SubSwarmSpec, SwarmSpec};

/// Criteria that fail on the shipped configuration for reasons recorded in
/// the design notes. They are still run and reported.
const KNOWN_FAILURES: &[&str] = &["8a"];

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn experiment(name: &str, seed: u64) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/experiments/{name}.json"));
    let mut cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    cfg.seed = seed;
    cfg
}

fn random_point(rng: &mut RngHandle, r_max: f64) -> DiscPoint {
    DiscPoint::from_polar(r_max * rng.uniform().sqrt(), rng.angle()).unwrap()
}

fn random_mobius(rng: &mut RngHandle) -> MobiusTransform {
    MobiusTransform::new(random_point(rng, 0.8), rng.angle())
}

// ---------------------------------------------------------------- frog

struct FrogSeed {
    best: f64,
    free_jumps: usize,
    final_reward: f64,
    generations: usize,
    wall: Duration,
}

fn frog_runs() -> Vec<FrogSeed> {
    SEEDS
        .iter()
        .map(|&s| {
            let cfg = experiment("frog", s);
            let EnvConfig::Frog(env) = cfg.load_env().unwrap() else { unreachable!() };
            let start = Instant::now();
            let run = run_frog(&cfg, &env).unwrap();
            FrogSeed {
                best: run.training.best_score,
                free_jumps: run.policy.free_jumps(),
                final_reward: run.final_reward,
                generations: run.training.records.len(),
                wall: start.elapsed(),
            }
        })
        .collect()
}

fn frog_optimum(runs: &[FrogSeed]) -> Outcome {
    let ok = |r: &FrogSeed| r.best >= 4.5 && r.generations <= 300 && r.wall < Duration::from_secs(120);
    let passed = runs.iter().filter(|r| ok(r)).count();
    let detail = runs
        .iter()
        .map(|r| format!("best {:.2} in {} gens, {:.1}s", r.best, r.generations, r.wall.as_secs_f64()))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        id: "1",
        name: "frog reaches 4.5 within 300 generations, < 2 min per seed",
        pass: passed >= 4,
        detail: format!("{passed}/5 seeds ({detail})"),
    }
}

fn frog_structure(runs: &[FrogSeed]) -> Outcome {
    let passed = runs.iter().filter(|r| r.free_jumps == 2).count();
    let detail = runs
        .iter()
        .map(|r| format!("{} free, final {:.2}", r.free_jumps, r.final_reward))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        id: "2",
        name: "frog policy has exactly two jumps with |m| < 0.2",
        pass: passed >= 3,
        detail: format!("{passed}/5 seeds ({detail})"),
    }
}

// ---------------------------------------------------------- multilayer

fn multilayer() -> Outcome {
    let mut passed = 0;
    let mut parts = Vec::new();
    for s in SEEDS {
        let cfg = experiment("multilayer", s);
        let EnvConfig::Multilayer(inst) = cfg.load_env().unwrap() else { unreachable!() };
        let run = run_multilayer(&cfg, &inst).unwrap();
        let gens = run.training.records.len();
        if run.best_error == -4 && gens <= 500 && run.max_drift < 1e-5 {
            passed += 1;
        }
        parts.push(format!("J {} in {gens} gens, drift {:.1e}", run.best_error, run.max_drift));
    }
    Outcome {
        id: "3",
        name: "multilayer reaches J = -4 within 500 generations, drift < 1e-5",
        pass: passed >= 4,
        detail: format!("{passed}/5 seeds ({})", parts.join("; ")),
    }
}

// --------------------------------------------------------------- swarm

fn symmetric(n: usize, rng: &mut RngHandle, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for j in 0..n {
        for k in j..n {
            let v = scale * rng.standard_normal();
            m[j * n + k] = v;
            m[k * n + j] = v;
        }
    }
    m
}

fn swarm_invariants() -> Outcome {
    let mut rng = RngHandle::new(40);
    let mut global_worst: f64 = 0.0;
    for _ in 0..20 {
        let n = 2 + (rng.uniform() * 9.0) as usize;
        let spec = SwarmSpec::global(n, rng.standard_normal(), 2.0 * rng.standard_normal(), rng.angle()).unwrap();
        let z0: Vec<Complex64> = (0..n).map(|_| random_point(&mut rng, 0.7).to_complex()).collect();
        let traj = integrate(|z: &Vec<Complex64>, o: &mut Vec<Complex64>| spec.velocity_into(z, o), z0, 0.0, 2.0, 1e-3, 1).unwrap();
        global_worst = global_worst.max(verify_isometry(&traj, &vec![0; n]));
    }
    let mut within_worst: f64 = 0.0;
    let mut cross_min = f64::INFINITY;
    for _ in 0..10 {
        let sizes = vec![2 + (rng.uniform() * 3.0) as usize, 2 + (rng.uniform() * 3.0) as usize];
        let spec = SubSwarmSpec::new(sizes.clone(), rng.standard_normal(), symmetric(2, &mut rng, 1.5), symmetric(2, &mut rng, PI)).unwrap();
        let total: usize = sizes.iter().sum();
        let z0: Vec<Complex64> = (0..total).map(|_| random_point(&mut rng, 0.7).to_complex()).collect();
        let traj = integrate(|z: &Vec<Complex64>, o: &mut Vec<Complex64>| spec.velocity_into(z, o), z0, 0.0, 2.0, 1e-3, 1).unwrap();
        let grouping = spec.grouping();
        within_worst = within_worst.max(verify_isometry(&traj, &grouping));
        cross_min = cross_min.min(cross_group_change(&traj, &grouping));
    }
    Outcome {
        id: "4",
        name: "swarm flows are isometries (global and per sub-swarm)",
        pass: global_worst < 1e-6 && within_worst < 1e-6 && cross_min > 1e-2,
        detail: format!(
            "global drift {global_worst:.1e}, within-group drift {within_worst:.1e}, smallest cross-group change {cross_min:.3}"
        ),
    }
}

// ------------------------------------------------------- distributions

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Worst `|observed − expected| / σ` over bins of a multinomial count.
fn worst_z(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = n as f64 * p;
            (c as f64 - e).abs() / (e * (1.0 - p)).sqrt()
        })
        .fold(0.0, f64::max)
}

fn cn_mass(cn: &ConformalNatural, r0: f64, r1: f64, t0: f64, t1: f64) -> f64 {
    // density is per hyperbolic area dA/(1 − r²)²
    simpson(
        |r| {
            simpson(
                |t| cn.density(DiscPoint::clamped(Complex64::from_polar(r, t)).unwrap()),
                t0,
                t1,
                64,
            ) * r
                / (1.0 - r * r).powi(2)
        },
        r0,
        r1.min(1.0 - 1e-12),
        400,
    )
}

fn distributions() -> Outcome {
    let wc_points = [(0.0, 0.0), (0.5, 0.2), (-0.7, 0.6), (0.0, -0.95)];
    let wc_norm = wc_points
        .iter()
        .map(|&(x, y)| {
            let wc = WrappedCauchy::new(DiscPoint::new(x, y).unwrap());
            let n = 20_000;
            let h = TAU / n as f64;
            ((0..n).map(|k| wc.density(k as f64 * h)).sum::<f64>() * h - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let cn_laws = [((0.0, 0.0), 2.0), ((0.3, -0.2), 2.0), ((-0.4, 0.1), 3.0), ((0.1, 0.5), 4.5)];
    let cn_norm = cn_laws
        .iter()
        .map(|&((x, y), s)| {
            let cn = ConformalNatural::new(DiscPoint::new(x, y).unwrap(), s).unwrap();
            (cn_mass(&cn, 0.0, 1.0, 0.0, TAU) - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let samples = 100_000;
    let mut rng = RngHandle::new(50);

    let wc = WrappedCauchy::new(DiscPoint::new(0.5, 0.3).unwrap());
    let bins = 32;
    let mut counts = vec![0usize; bins];
    for _ in 0..samples {
        let phi = wc.sample(&mut rng);
        counts[((phi / TAU * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let probs: Vec<f64> = (0..bins)
        .map(|b| simpson(|p| wc.density(p), b as f64 * TAU / bins as f64, (b + 1) as f64 * TAU / bins as f64, 200))
        .collect();
    let wc_z = worst_z(&counts, &probs);

    let cn = ConformalNatural::new(DiscPoint::new(0.3, -0.2).unwrap(), 3.0).unwrap();
    let (rb, tb) = (6, 8);
    let edges: Vec<f64> = (0..=rb).map(|k| (k as f64 / rb as f64).sqrt()).collect();
    let mut counts = vec![0usize; rb * tb];
    for _ in 0..samples {
        let z = cn.sample(&mut rng);
        let r = edges.iter().rposition(|&e| e <= z.norm()).unwrap().min(rb - 1);
        let t = ((z.arg().rem_euclid(TAU) / TAU * tb as f64) as usize).min(tb - 1);
        counts[r * tb + t] += 1;
    }
    let probs: Vec<f64> = (0..rb * tb)
        .map(|i| {
            let (r, t) = (i / tb, i % tb);
            cn_mass(&cn, edges[r], edges[r + 1], t as f64 * TAU / tb as f64, (t + 1) as f64 * TAU / tb as f64)
        })
        .collect();
    let cn_z = worst_z(&counts, &probs);

    let g = GaussianParams::new(0.7, 2.5).unwrap();
    let sd = g.var.sqrt();
    let cuts: Vec<f64> = (0..=20).map(|k| g.m + sd * (-3.0 + 0.3 * k as f64)).collect();
    let mut counts = vec![0usize; cuts.len() + 1];
    for _ in 0..samples {
        let x = gaussian_sample(&g, &mut rng).unwrap();
        counts[cuts.partition_point(|&c| c <= x)] += 1;
    }
    let cdf: Vec<f64> = cuts.iter().map(|&c| standard_normal_cdf((c - g.m) / sd)).collect();
    let probs: Vec<f64> = (0..=cuts.len())
        .map(|i| {
            let hi = if i < cuts.len() { cdf[i] } else { 1.0 };
            let lo = if i > 0 { cdf[i - 1] } else { 0.0 };
            hi - lo
        })
        .collect();
    let gauss_z = worst_z(&counts, &probs);

    let origin = WrappedCauchy::new(DiscPoint::ORIGIN);
    let xs: Vec<f64> = (0..10_000).map(|_| origin.sample(&mut rng) / TAU).collect();
    let ks = ks_uniform(&xs);

    Outcome {
        id: "5",
        name: "densities normalize, samplers match densities, WC(0) is uniform",
        pass: wc_norm < 1e-8 && cn_norm < 1e-6 && wc_z < 3.0 && cn_z < 3.0 && gauss_z < 3.0 && ks < 0.02,
        detail: format!(
            "wc norm err {wc_norm:.1e}, cn norm err {cn_norm:.1e}, worst bin z: wc {wc_z:.2}, cn {cn_z:.2}, gaussian {gauss_z:.2}, KS {ks:.4}"
        ),
    }
}

// -------------------------------------------------------------- cmaes

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

fn cmaes_quality() -> Outcome {
    let serial = |g| OptimizeOptions {
        max_generations: g,
        parallel: false,
        ..Default::default()
    };
    let sphere = cmaes_optimize(
        |x: &[f64], _: &mut RngHandle| x.iter().map(|v| v * v).sum(),
        &[1.0; 5],
        1.0,
        &serial(300),
        &RngHandle::new(60),
    )
    .unwrap();
    let norm = sphere.final_state.mean().iter().map(|v| v * v).sum::<f64>().sqrt();

    let rosen = cmaes_optimize(|x: &[f64], _: &mut RngHandle| rosenbrock(x), &[-1.0, 1.0], 0.5, &serial(600), &RngHandle::new(61))
        .unwrap();
    let f = rosenbrock(rosen.final_state.mean());

    let c = [0.75, -1.25, 2.5];
    let mean0 = [1.0, 2.0, -0.5];
    let shifted0: Vec<f64> = mean0.iter().zip(&c).map(|(m, ci)| m + ci).collect();
    let mut plain = CmaesState::new(&mean0, 0.8, None).unwrap();
    let mut moved = CmaesState::new(&shifted0, 0.8, None).unwrap();
    let mut equiv: f64 = 0.0;
    for g in 0..200 {
        let mut pa = plain.ask(&mut RngHandle::new(g));
        let mut pb = moved.ask(&mut RngHandle::new(g));
        for (a, b) in pa.iter_mut().zip(pb.iter_mut()) {
            a.fitness = rosenbrock(&a.x);
            let back: Vec<f64> = b.x.iter().zip(&c).map(|(x, ci)| x - ci).collect();
            b.fitness = rosenbrock(&back);
        }
        plain.tell(&pa).unwrap();
        moved.tell(&pb).unwrap();
        for ((m, s), ci) in plain.mean().iter().zip(moved.mean()).zip(&c) {
            equiv = equiv.max((s - ci - m).abs());
        }
    }
    Outcome {
        id: "6",
        name: "CMA-ES solves sphere and Rosenbrock, is translation-equivariant",
        pass: norm < 1e-6 && f < 1e-6 && equiv < 1e-12,
        detail: format!("sphere |mean| {norm:.1e}, rosenbrock f {f:.1e}, translation error {equiv:.1e}"),
    }
}

// ----------------------------------------------------------- labyrinth

fn labyrinth_m2() -> Outcome {
    let mut passed = 0;
    let mut parts = Vec::new();
    for s in SEEDS {
        let cfg = experiment("labyrinth_m2", s);
        let EnvConfig::Labyrinth(env) = cfg.load_env().unwrap() else { unreachable!() };
        let base = runner::baseline(&cfg, 1000).unwrap();
        let run = run_labyrinth(&cfg, &env, Method::WrappedCauchy).unwrap();
        let bar = base.mean + 2.0 * base.sd;
        if cfg.rollout.final_rollouts == 1000 && run.final_reward >= bar {
            passed += 1;
        }
        parts.push(format!("{:.1} vs {bar:.1}", run.final_reward));
    }
    Outcome {
        id: "7a",
        name: "labyrinth wrapped-Cauchy policy beats random by 2 SD",
        pass: passed == SEEDS.len(),
        detail: format!("{passed}/5 seeds ({})", parts.join("; ")),
    }
}

fn labyrinth_m1() -> Outcome {
    let mut passed = 0;
    let mut parts = Vec::new();
    for s in SEEDS {
        let cfg = experiment("labyrinth_m1", s);
        let EnvConfig::Labyrinth(env) = cfg.load_env().unwrap() else { unreachable!() };
        let run = run_labyrinth(&cfg, &env, Method::Phases).unwrap();
        let random_best = random_search_best(&env, 10_000, &mut RngHandle::new(s).substream(3));
        let gen0 = run.initial_reward();
        let bar = gen0 + 0.5 * (random_best - gen0);
        if run.final_reward >= bar {
            passed += 1;
        }
        parts.push(format!("{:.0} vs {bar:.1}", run.final_reward));
    }
    Outcome {
        id: "7b",
        name: "labyrinth phase policy closes half the gap to random search",
        pass: passed == SEEDS.len(),
        detail: format!("{passed}/5 seeds ({})", parts.join("; ")),
    }
}

// ---------------------------------------------------------- two player

fn two_frogs() -> Outcome {
    let mut passed = 0;
    let mut parts = Vec::new();
    for s in SEEDS {
        let cfg = experiment("two_frogs", s);
        let run = run_two_player(&cfg, &cfg.load_env().unwrap()).unwrap();
        let [a, b] = run.final_rewards;
        if a.min(b) >= 3.0 && a.max(b) >= 4.5 {
            passed += 1;
        }
        parts.push(format!("({a:.2}, {b:.2})"));
    }
    Outcome {
        id: "8a",
        name: "two frogs split with min >= 3 and max >= 4.5",
        pass: passed >= 3,
        detail: format!("{passed}/5 seeds {}", parts.join(" ")),
    }
}

fn plane_game() -> Outcome {
    let mut passed = 0;
    let mut parts = Vec::new();
    for s in SEEDS {
        let cfg = experiment("plane_game", s);
        let env = cfg.load_env().unwrap();
        let EnvConfig::PlaneGame(game) = &env else { unreachable!() };
        let run = run_two_player(&cfg, &env).unwrap();
        let means = |p: usize| -> [f64; 3] {
            let d = &run.policies[p].distributions;
            [d[0].m, d[1].m, d[2].m]
        };
        let at_means = plane_game_rewards(&means(0), &means(1), game);
        let [a, b] = run.final_rewards;
        if at_means == (2.0, 2.0) && (a - 2.0).abs() <= 0.05 && (b - 2.0).abs() <= 0.05 {
            passed += 1;
        }
        parts.push(format!("({a:.3}, {b:.3})"));
    }
    Outcome {
        id: "8b",
        name: "plane game settles on the (2,2) field",
        pass: passed >= 3,
        detail: format!("{passed}/5 seeds {}", parts.join(" ")),
    }
}

// --------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let names = ["frog", "multilayer", "labyrinth_m1", "labyrinth_m2", "two_frogs", "plane_game"];
    for name in names {
        let mut cfg = experiment(name, 7);
        cfg.cmaes.max_generations = 12;
        let csv = |tag: &str| -> Vec<u8> {
            let out: PathBuf = dir.path().join(format!("{name}_{tag}"));
            output::write_outputs(&runner::run_experiment(&cfg).unwrap(), &out).unwrap();
            std::fs::read(out.join("rewards.csv")).unwrap()
        };
        if csv("first") == csv("second") {
            identical += 1;
        }
    }
    Outcome {
        id: "9",
        name: "reruns write byte-identical rewards.csv",
        pass: identical == names.len(),
        detail: format!("{identical}/{} problems identical", names.len()),
    }
}

// ------------------------------------------------------------ geometry

fn geometry() -> Outcome {
    let mut rng = RngHandle::new(70);
    let mut worst: f64 = 0.0;
    let mut track = |e: f64| worst = worst.max(e);
    let mut triangle_ok = true;
    for _ in 0..1000 {
        let (g1, g2, g3) = (random_mobius(&mut rng), random_mobius(&mut rng), random_mobius(&mut rng));
        let (x, y, z) = (random_point(&mut rng, 0.8), random_point(&mut rng, 0.8), random_point(&mut rng, 0.8));
        let dist = |p: DiscPoint, q: DiscPoint| (p.to_complex() - q.to_complex()).norm();

        track(dist(g1.compose(&g2.compose(&g3)).apply(z), g1.compose(&g2).compose(&g3).apply(z)));
        track(dist(g1.compose(&MobiusTransform::identity()).apply(z), g1.apply(z)));
        track(dist(g1.compose(&g1.inverse()).apply(z), z));
        track(dist(g1.inverse().compose(&g1).apply(z), z));

        track(hyp_distance(x, x));
        track((hyp_distance(x, y) - hyp_distance(y, x)).abs());
        triangle_ok &= hyp_distance(x, z) <= hyp_distance(x, y) + hyp_distance(y, z) + 1e-12;
        triangle_ok &= x == y || hyp_distance(x, y) > 0.0;

        track((hyp_distance(g1.apply(x), g1.apply(y)) - hyp_distance(x, y)).abs());

        track(dist(gaussian_to_disc(disc_to_gaussian(z)).unwrap(), z));
    }

    // order of the integrator on a nonlinear swarm, against a fine reference
    let spec = SwarmSpec::new(4, 0.7, symmetric(4, &mut rng, 1.0), symmetric(4, &mut rng, 1.0)).unwrap();
    let z0: Vec<Complex64> = (0..4).map(|_| random_point(&mut rng, 0.6).to_complex()).collect();
    let endpoint = |dt: f64| {
        integrate(|z: &Vec<Complex64>, o: &mut Vec<Complex64>| spec.velocity_into(z, o), z0.clone(), 0.0, 2.0, dt, 0)
            .unwrap()
            .last()
            .clone()
    };
    let reference = endpoint(1e-4);
    let err = |dt: f64| endpoint(dt).iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let order = (err(0.1) / err(0.05)).log2();

    Outcome {
        id: "10",
        name: "Mobius group, metric, invariance, Cayley round trip; RK4 order",
        pass: worst < 1e-12 && triangle_ok && (3.7..=4.3).contains(&order),
        detail: format!("worst identity error {worst:.1e} over 1000 cases, triangle ok {triangle_ok}, RK4 order {order:.3}"),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        let expected = KNOWN_FAILURES.contains(&o.id);
        let verdict = match (o.pass, expected) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (listed as known failure)",
        };
        println!("{verdict:<5} [{}] {}: {}", o.id, o.name, o.detail);
        outcomes.push((o.pass, expected));
    };
    report(geometry());
    report(distributions());
    report(swarm_invariants());
    report(cmaes_quality());
    let frogs = frog_runs();
    report(frog_optimum(&frogs));
    report(frog_structure(&frogs));
    report(multilayer());
    report(labyrinth_m2());
    report(labyrinth_m1());
    report(two_frogs());
    report(plane_game());
    report(determinism());

    let unexpected = outcomes.iter().filter(|(pass, expected)| pass == expected).count();
    println!(
        "acceptance: {} passed, {} failed ({} known) in {:.0}s",
        outcomes.iter().filter(|o| o.0).count(),
        outcomes.iter().filter(|o| !o.0).count(),
        outcomes.iter().filter(|o| !o.0 && o.1).count(),
        started.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
