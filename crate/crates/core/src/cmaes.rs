//! (μ/μ_w, λ)-CMA-ES with an ask/tell interface.
//!
//! Strategy constants are the usual defaults: `λ = 4 + ⌊3 ln n⌋`,
//! `μ = ⌊λ/2⌋` log-rank weights, cumulative step-size adaptation and the
//! combined rank-one / rank-μ covariance update. The optimizer minimizes;
//! callers that maximize negate their rewards.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::RngHandle;
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest one are floored.
const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    /// Lower is better. `NaN` until evaluated.
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct CmaesState {
    dim: usize,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: usize,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
    // steps (x − mean)/σ and points of the outstanding ask
    pending: Option<(Vec<DVector<f64>>, Vec<Vec<f64>>)>,
}

pub fn default_lambda(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

impl CmaesState {
    pub fn new(mean0: &[f64], sigma0: f64, lambda: Option<usize>) -> Result<Self> {
        let n = mean0.len();
        if n == 0 {
            return Err(Error::param("CMA-ES needs at least one dimension"));
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::param(format!("initial step size must be positive, got {sigma0}")));
        }
        if mean0.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("initial mean must be finite"));
        }
        let lambda = lambda.unwrap_or_else(|| default_lambda(n));
        if lambda < 2 {
            return Err(Error::param(format!("population size must be at least 2, got {lambda}")));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let nf = n as f64;
        let c_sigma = (mueff + 2.0) / (nf + mueff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let c_mu = (1.0 - c_1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        Ok(CmaesState {
            dim: n,
            mean: DVector::from_column_slice(mean0),
            sigma: sigma0,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            lambda,
            weights,
            mueff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            pending: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn mu(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn evolution_paths(&self) -> (&[f64], &[f64]) {
        (self.p_sigma.as_slice(), self.p_c.as_slice())
    }

    /// Smallest eigenvalue of the covariance after the last repair.
    pub fn min_eigenvalue(&self) -> f64 {
        self.scales.iter().map(|d| d * d).fold(f64::INFINITY, f64::min)
    }

    /// Samples `λ` candidates `mean + σ B D n_k`.
    pub fn ask(&mut self, rng: &mut RngHandle) -> Vec<Candidate> {
        let bd = &self.basis * DMatrix::from_diagonal(&self.scales);
        let mut steps = Vec::with_capacity(self.lambda);
        let mut points = Vec::with_capacity(self.lambda);
        for _ in 0..self.lambda {
            let normal = DVector::from_fn(self.dim, |_, _| rng.standard_normal());
            let y = &bd * normal;
            let x: Vec<f64> = self
                .mean
                .iter()
                .zip(y.iter())
                .map(|(m, yi)| m + self.sigma * yi)
                .collect();
            steps.push(y);
            points.push(x);
        }
        let out = points
            .iter()
            .map(|x| Candidate {
                x: x.clone(),
                fitness: f64::NAN,
            })
            .collect();
        self.pending = Some((steps, points));
        out
    }

    /// Updates the distribution from the evaluated output of the last
    /// [`ask`](Self::ask), given in the same order.
    ///
    /// Non-finite fitness ranks last; equal fitness keeps candidate order.
    pub fn tell(&mut self, candidates: &[Candidate]) -> Result<()> {
        let (steps, points) = self
            .pending
            .take()
            .ok_or_else(|| Error::param("tell called without a matching ask"))?;
        if candidates.len() != self.lambda {
            self.pending = Some((steps, points));
            return Err(Error::DimensionMismatch {
                expected: self.lambda,
                got: candidates.len(),
            });
        }
        if candidates.iter().zip(&points).any(|(c, x)| &c.x != x) {
            self.pending = Some((steps, points));
            return Err(Error::param("candidates do not match the last ask"));
        }

        let fitness: Vec<f64> = candidates
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.fitness.is_finite() {
                    c.fitness
                } else {
                    log::warn!("candidate {k} has non-finite fitness {}; ranking it last", c.fitness);
                    f64::INFINITY
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));

        let n = self.dim as f64;
        let mut y_w = DVector::zeros(self.dim);
        for (w, &k) in self.weights.iter().zip(&order) {
            y_w.axpy(*w, &steps[k], 1.0);
        }
        self.mean.axpy(self.sigma, &y_w, 1.0);

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let mut whitened = self.basis.transpose() * &y_w;
        for (v, d) in whitened.iter_mut().zip(self.scales.iter()) {
            *v /= d;
        }
        let whitened = &self.basis * whitened;
        let cs = self.c_sigma;
        self.p_sigma = (1.0 - cs) * &self.p_sigma + (cs * (2.0 - cs) * self.mueff).sqrt() * whitened;

        let gen = (self.generation + 1) as f64;
        let ps_norm = self.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gen)).sqrt()
            < (1.4 + 2.0 / (n + 1.0)) * self.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        let cc = self.c_c;
        self.p_c = (1.0 - cc) * &self.p_c + h * (cc * (2.0 - cc) * self.mueff).sqrt() * &y_w;

        let delta = (1.0 - h) * cc * (2.0 - cc);
        let mut rank_mu = DMatrix::zeros(self.dim, self.dim);
        for (w, &k) in self.weights.iter().zip(&order) {
            rank_mu.ger(*w, &steps[k], &steps[k], 1.0);
        }
        let decay = 1.0 + self.c_1 * delta - self.c_1 - self.c_mu;
        let mut cov = decay * &self.cov + self.c_1 * &self.p_c * self.p_c.transpose() + self.c_mu * rank_mu;
        // symmetrize against round-off
        cov = 0.5 * (&cov + cov.transpose());

        self.sigma *= ((cs / self.d_sigma) * (ps_norm / self.chi_n - 1.0)).exp();
        self.generation += 1;
        self.set_covariance(cov);
        Ok(())
    }

    fn set_covariance(&mut self, cov: DMatrix<f64>) {
        let eig = SymmetricEigen::new(cov.clone());
        let largest = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let floor = if largest > 0.0 { EIGEN_FLOOR * largest } else { EIGEN_FLOOR };
        let mut repaired = false;
        let eigenvalues = eig.eigenvalues.map(|v| {
            if v < floor || !v.is_finite() {
                repaired = true;
                floor
            } else {
                v
            }
        });
        self.basis = eig.eigenvectors;
        self.scales = eigenvalues.map(f64::sqrt);
        self.cov = if repaired {
            log::debug!("covariance repaired at generation {}", self.generation);
            &self.basis * DMatrix::from_diagonal(&eigenvalues) * self.basis.transpose()
        } else {
            cov
        };
    }
}

pub fn cmaes_new(mean0: &[f64], sigma0: f64, lambda: Option<usize>) -> Result<CmaesState> {
    CmaesState::new(mean0, sigma0, lambda)
}

pub fn cmaes_ask(state: &mut CmaesState, rng: &mut RngHandle) -> Vec<Candidate> {
    state.ask(rng)
}

pub fn cmaes_tell(state: &mut CmaesState, candidates: &[Candidate]) -> Result<()> {
    state.tell(candidates)
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub lambda: Option<usize>,
    pub max_generations: usize,
    /// Stop once a candidate reaches this fitness.
    pub target: Option<f64>,
    /// Stop once the best-ever fitness has improved by less than
    /// `stall_tolerance` over this many generations.
    pub stall_generations: Option<usize>,
    pub stall_tolerance: f64,
    pub parallel: bool,
    /// Print one progress line per generation to standard error.
    pub progress: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            lambda: None,
            max_generations: 300,
            target: None,
            stall_generations: None,
            stall_tolerance: 1e-6,
            parallel: true,
            progress: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub best_ever: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: Candidate,
    pub history: Vec<GenerationStats>,
    pub final_state: CmaesState,
    pub target_reached: bool,
}

/// Evaluates a population; candidate `k` gets `rng.substream(k)`, so the
/// result does not depend on scheduling.
pub fn evaluate_population<F>(candidates: &mut [Candidate], rng: &RngHandle, objective: &F, parallel: bool)
where
    F: Fn(&[f64], &mut RngHandle) -> f64 + Sync,
{
    let eval = |(k, c): (usize, &mut Candidate)| {
        let mut sub = rng.substream(k as u64);
        c.fitness = objective(&c.x, &mut sub);
    };
    if parallel {
        candidates.par_iter_mut().enumerate().for_each(eval);
    } else {
        candidates.iter_mut().enumerate().for_each(eval);
    }
}

/// Runs ask/tell until the budget, target or stall criterion ends the search.
///
/// Each generation draws its candidates from `rng.substream(2g)` and
/// evaluates them with fresh sub-seeds from `rng.substream(2g + 1)`, so noisy
/// objectives are never re-used across generations.
pub fn cmaes_optimize<F>(
    objective: F,
    mean0: &[f64],
    sigma0: f64,
    opts: &OptimizeOptions,
    rng: &RngHandle,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64], &mut RngHandle) -> f64 + Sync,
{
    cmaes_optimize_observed(objective, mean0, sigma0, opts, rng, |_, _| {})
}

/// [`cmaes_optimize`] that also hands every evaluated generation to
/// `observe` before the update.
pub fn cmaes_optimize_observed<F, O>(
    objective: F,
    mean0: &[f64],
    sigma0: f64,
    opts: &OptimizeOptions,
    rng: &RngHandle,
    mut observe: O,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64], &mut RngHandle) -> f64 + Sync,
    O: FnMut(&GenerationStats, &[Candidate]),
{
    if opts.max_generations == 0 {
        return Err(Error::param("generation budget must be positive"));
    }
    let mut state = CmaesState::new(mean0, sigma0, opts.lambda)?;
    let mut best: Option<Candidate> = None;
    let mut history = Vec::with_capacity(opts.max_generations);
    let mut target_reached = false;

    for g in 0..opts.max_generations {
        let mut ask_rng = rng.substream(2 * g as u64);
        let eval_rng = rng.substream(2 * g as u64 + 1);
        let mut pop = state.ask(&mut ask_rng);
        evaluate_population(&mut pop, &eval_rng, &objective, opts.parallel);

        let ranked = |c: &Candidate| if c.fitness.is_finite() { c.fitness } else { f64::INFINITY };
        let gen_best = pop
            .iter()
            .min_by(|a, b| ranked(a).total_cmp(&ranked(b)))
            .expect("population is non-empty");
        if best.as_ref().is_none_or(|b| ranked(gen_best) < b.fitness) {
            best = Some(Candidate {
                x: gen_best.x.clone(),
                fitness: ranked(gen_best),
            });
        }
        let finite: Vec<f64> = pop.iter().map(|c| c.fitness).filter(|f| f.is_finite()).collect();
        let gen_mean = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let best_ever = best.as_ref().map_or(f64::INFINITY, |b| b.fitness);
        let stats = GenerationStats {
            generation: g,
            best: ranked(gen_best),
            mean: gen_mean,
            best_ever,
            sigma: state.sigma(),
        };
        if opts.progress {
            eprintln!("gen {:>4}  best {:>14.6e}  sigma {:.3e}", g, stats.best, stats.sigma);
        }
        observe(&stats, &pop);
        history.push(stats);
        state.tell(&pop)?;

        if opts.target.is_some_and(|t| best_ever <= t) {
            target_reached = true;
            break;
        }
        if let Some(window) = opts.stall_generations {
            if history.len() > window {
                let before = history[history.len() - 1 - window].best_ever;
                if before - best_ever < opts.stall_tolerance {
                    break;
                }
            }
        }
    }

    Ok(OptimizeResult {
        best: best.expect("at least one generation ran"),
        history,
        final_state: state,
        target_reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64], _: &mut RngHandle) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn default_population_sizes() {
        assert_eq!(default_lambda(10), 10);
        assert_eq!(default_lambda(1), 4);
        let s = CmaesState::new(&[0.0; 10], 1.0, None).unwrap();
        assert_eq!(s.lambda(), 10);
        assert_eq!(s.mu(), 5);
        assert_eq!(s.generation(), 0);
        assert_eq!(s.covariance(), &DMatrix::identity(10, 10));
    }

    #[test]
    fn weights_are_normalized_and_non_increasing() {
        let s = CmaesState::new(&[0.0; 7], 1.0, None).unwrap();
        let w = s.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(CmaesState::new(&[], 1.0, None).is_err());
        assert!(CmaesState::new(&[0.0], 0.0, None).is_err());
        assert!(CmaesState::new(&[0.0], -1.0, None).is_err());
        assert!(CmaesState::new(&[0.0], 1.0, Some(1)).is_err());
    }

    #[test]
    fn tiny_sigma_collapses_population() {
        let mut s = CmaesState::new(&[1.0, -2.0], 1e-12, None).unwrap();
        let pop = s.ask(&mut RngHandle::new(1));
        for c in &pop {
            assert!((c.x[0] - 1.0).abs() < 1e-10 && (c.x[1] + 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ask_is_deterministic() {
        let mut a = CmaesState::new(&[0.5; 4], 0.3, None).unwrap();
        let mut b = a.clone();
        let xs = |pop: Vec<Candidate>| pop.into_iter().map(|c| c.x).collect::<Vec<_>>();
        assert_eq!(xs(a.ask(&mut RngHandle::new(9))), xs(b.ask(&mut RngHandle::new(9))));
    }

    #[test]
    fn identity_covariance_samples_are_standard_normal() {
        let dim = 3;
        let mut s = CmaesState::new(&[1.0, 2.0, 3.0], 0.5, Some(100)).unwrap();
        let mut rng = RngHandle::new(2);
        let mut devs = Vec::new();
        for _ in 0..100 {
            for c in s.ask(&mut rng) {
                devs.push(c.x.iter().zip(s.mean()).map(|(x, m)| (x - m) / 0.5).collect::<Vec<_>>());
            }
        }
        let n = devs.len() as f64;
        for i in 0..dim {
            let m: f64 = devs.iter().map(|d| d[i]).sum::<f64>() / n;
            assert!(m.abs() < 0.05);
            for j in 0..dim {
                let c: f64 = devs.iter().map(|d| d[i] * d[j]).sum::<f64>() / n;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((c - expected).abs() < 0.1, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn tell_validates_input() {
        let mut s = CmaesState::new(&[0.0; 2], 1.0, None).unwrap();
        assert!(s.tell(&[]).is_err());
        let mut pop = s.ask(&mut RngHandle::new(3));
        assert!(s.tell(&pop[1..]).is_err());
        let mut tampered = pop.clone();
        tampered[0].x[0] += 1.0;
        assert!(s.tell(&tampered).is_err());
        for c in &mut pop {
            c.fitness = 0.0;
        }
        assert!(s.tell(&pop).is_ok());
        assert_eq!(s.generation(), 1);
    }

    #[test]
    fn equal_fitness_recombines_leading_candidates() {
        let mut s = CmaesState::new(&[0.0; 3], 1.0, None).unwrap();
        let sigma0 = s.sigma();
        let mut pop = s.ask(&mut RngHandle::new(4));
        for c in &mut pop {
            c.fitness = 1.0;
        }
        let mut expected = vec![0.0; 3];
        for (w, c) in s.weights().iter().zip(&pop) {
            for (e, x) in expected.iter_mut().zip(&c.x) {
                *e += w * x;
            }
        }
        s.tell(&pop).unwrap();
        for (m, e) in s.mean().iter().zip(&expected) {
            assert!((m - e).abs() < 1e-14);
        }
        assert!(s.sigma() != sigma0);
    }

    #[test]
    fn non_finite_fitness_ranks_last() {
        let mut s = CmaesState::new(&[0.0; 2], 1.0, Some(4)).unwrap();
        let mut pop = s.ask(&mut RngHandle::new(5));
        pop[0].fitness = f64::NAN;
        pop[1].fitness = 3.0;
        pop[2].fitness = 1.0;
        pop[3].fitness = 2.0;
        let w = s.weights().to_vec();
        let expected: Vec<f64> = (0..2).map(|i| w[0] * pop[2].x[i] + w[1] * pop[3].x[i]).collect();
        s.tell(&pop).unwrap();
        for (m, e) in s.mean().iter().zip(&expected) {
            assert!((m - e).abs() < 1e-14);
        }
    }

    #[test]
    fn covariance_stays_positive_definite_under_random_fitness() {
        let mut s = CmaesState::new(&[0.0; 4], 1.0, None).unwrap();
        let mut rng = RngHandle::new(6);
        for _ in 0..1000 {
            let mut pop = s.ask(&mut rng);
            for c in &mut pop {
                c.fitness = rng.uniform();
            }
            s.tell(&pop).unwrap();
            assert!(s.min_eigenvalue() > 0.0);
            let c = s.covariance();
            assert!((c - c.transpose()).abs().max() == 0.0);
        }
    }

    #[test]
    fn solves_sphere() {
        let opts = OptimizeOptions {
            max_generations: 300,
            ..Default::default()
        };
        let res = cmaes_optimize(sphere, &[3.0; 5], 1.0, &opts, &RngHandle::new(7)).unwrap();
        let norm = res.final_state.mean().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "{norm}");
    }

    #[test]
    fn best_ever_is_monotone() {
        let opts = OptimizeOptions {
            max_generations: 50,
            ..Default::default()
        };
        let res = cmaes_optimize(sphere, &[1.0; 3], 1.0, &opts, &RngHandle::new(8)).unwrap();
        assert!(res.history.windows(2).all(|w| w[1].best_ever <= w[0].best_ever));
        assert_eq!(res.best.fitness, res.history.last().unwrap().best_ever);
    }

    #[test]
    fn zero_budget_is_an_error() {
        let opts = OptimizeOptions {
            max_generations: 0,
            ..Default::default()
        };
        assert!(cmaes_optimize(sphere, &[1.0], 1.0, &opts, &RngHandle::new(0)).is_err());
    }

    #[test]
    fn constant_objective_has_flat_history() {
        let opts = OptimizeOptions {
            max_generations: 20,
            ..Default::default()
        };
        let res = cmaes_optimize(|_: &[f64], _: &mut RngHandle| 4.0, &[0.0; 2], 1.0, &opts, &RngHandle::new(1)).unwrap();
        assert!(res.history.iter().all(|h| h.best == 4.0 && h.mean == 4.0));
        assert_eq!(res.best.fitness, 4.0);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let noisy = |x: &[f64], rng: &mut RngHandle| sphere(x, rng) + rng.standard_normal();
        let mut opts = OptimizeOptions {
            max_generations: 40,
            ..Default::default()
        };
        let a = cmaes_optimize(noisy, &[1.0; 4], 1.0, &opts, &RngHandle::new(2)).unwrap();
        opts.parallel = false;
        let b = cmaes_optimize(noisy, &[1.0; 4], 1.0, &opts, &RngHandle::new(2)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn stall_criterion_stops_early() {
        let opts = OptimizeOptions {
            max_generations: 500,
            stall_generations: Some(30),
            ..Default::default()
        };
        let res = cmaes_optimize(|_: &[f64], _: &mut RngHandle| 1.0, &[0.0; 2], 1.0, &opts, &RngHandle::new(3)).unwrap();
        assert_eq!(res.history.len(), 31);
    }
}
