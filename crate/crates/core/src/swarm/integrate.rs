use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::BOUNDARY_GUARD;

/// States the fixed-step integrator can advance.
pub trait OdeState: Clone {
    /// `out = self + h·k`.
    fn axpy_into(&self, h: f64, k: &Self, out: &mut Self);

    /// `self += h/6 (k1 + 2 k2 + 2 k3 + k4)`.
    fn rk4_update(&mut self, h: f64, k: [&Self; 4]);

    fn all_finite(&self) -> bool;

    /// Pulls components that have left their domain back inside. Returns how
    /// many were corrected.
    fn guard(&mut self) -> usize {
        0
    }
}

impl OdeState for Vec<f64> {
    fn axpy_into(&self, h: f64, k: &Self, out: &mut Self) {
        for ((o, x), d) in out.iter_mut().zip(self).zip(k) {
            *o = x + h * d;
        }
    }

    fn rk4_update(&mut self, h: f64, k: [&Self; 4]) {
        for (i, x) in self.iter_mut().enumerate() {
            *x += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

/// Disc states: every component must stay in the open unit disc.
impl OdeState for Vec<Complex64> {
    fn axpy_into(&self, h: f64, k: &Self, out: &mut Self) {
        for ((o, x), d) in out.iter_mut().zip(self).zip(k) {
            *o = x + h * d;
        }
    }

    fn rk4_update(&mut self, h: f64, k: [&Self; 4]) {
        for (i, x) in self.iter_mut().enumerate() {
            *x += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn guard(&mut self) -> usize {
        let mut fixed = 0;
        for z in self.iter_mut() {
            let r = z.norm();
            if r >= BOUNDARY_GUARD {
                if r > 1.0 - 1e-9 {
                    log::trace!("boundary excursion |z| = {r}");
                }
                *z *= BOUNDARY_GUARD / r;
                fixed += 1;
            }
        }
        fixed
    }
}

/// Recorded solution of an initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// Number of component-steps where the boundary guard intervened.
    pub boundary_corrections: usize,
}

impl<S> Trajectory<S> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Recorded state whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> &S {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(i, _)| i);
        &self.states[idx]
    }
}

/// Classical fixed-step RK4 on `[t0, t1]` for an autonomous right-hand side
/// `rhs(state, out)`.
///
/// The last step is shortened so the final time is exactly `t1`. The initial
/// state, every `record_every`-th step and the final state are recorded;
/// `record_every = 0` keeps only the two endpoints.
pub fn integrate<S, F>(
    mut rhs: F,
    state0: S,
    t0: f64,
    t1: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory<S>>
where
    S: OdeState,
    F: FnMut(&S, &mut S),
{
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![state0.clone()],
        boundary_corrections: 0,
    };
    run(&mut rhs, state0, t0, t1, dt, |step, t, s, fixed, last| {
        traj.boundary_corrections += fixed;
        if last || (record_every > 0 && step % record_every == 0) {
            traj.times.push(t);
            traj.states.push(s.clone());
        }
    })?;
    Ok(traj)
}

/// Like [`integrate`] but returns only the final state.
pub fn integrate_endpoint<S, F>(mut rhs: F, state0: S, t0: f64, t1: f64, dt: f64) -> Result<S>
where
    S: OdeState,
    F: FnMut(&S, &mut S),
{
    run(&mut rhs, state0, t0, t1, dt, |_, _, _, _, _| {})
}

fn run<S, F, R>(rhs: &mut F, state0: S, t0: f64, t1: f64, dt: f64, mut record: R) -> Result<S>
where
    S: OdeState,
    F: FnMut(&S, &mut S),
    R: FnMut(usize, f64, &S, usize, bool),
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param(format!("step size must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::param(format!("time span [{t0}, {t1}] is empty")));
    }
    if !state0.all_finite() {
        return Err(Error::NonFinite { t: t0 });
    }
    let span = t1 - t0;
    let steps = ((span / dt) - 1e-9).ceil().max(0.0) as usize;

    let mut y = state0;
    let mut k1 = y.clone();
    let mut k2 = y.clone();
    let mut k3 = y.clone();
    let mut k4 = y.clone();
    let mut tmp = y.clone();
    for step in 1..=steps {
        let t_prev = t0 + (step - 1) as f64 * dt;
        let t_next = if step == steps { t1 } else { t0 + step as f64 * dt };
        let h = t_next - t_prev;

        rhs(&y, &mut k1);
        y.axpy_into(0.5 * h, &k1, &mut tmp);
        rhs(&tmp, &mut k2);
        y.axpy_into(0.5 * h, &k2, &mut tmp);
        rhs(&tmp, &mut k3);
        y.axpy_into(h, &k3, &mut tmp);
        rhs(&tmp, &mut k4);
        y.rk4_update(h, [&k1, &k2, &k3, &k4]);

        if !y.all_finite() {
            return Err(Error::NonFinite { t: t_next });
        }
        let fixed = y.guard();
        record(step, t_next, &y, fixed, step == steps);
    }
    Ok(y)
}
