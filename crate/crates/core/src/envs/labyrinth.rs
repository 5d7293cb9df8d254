//! Circular labyrinth: a walk of unit steps from the origin across concentric
//! circles split into rewarded arcs and barrier arcs.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{angular_index, check_turn};
use crate::error::{Error, Result};

/// Parameter slack for contacts at the ends of a step.
const CONTACT_EPS: f64 = 1e-9;

/// One arc of a circle, angles in degrees, half-open `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
    pub reward: f64,
}

impl Arc {
    pub fn new(start: f64, end: f64, reward: f64) -> Self {
        Arc { start, end, reward }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabyrinthConfig {
    pub radii: Vec<f64>,
    /// Per circle, contiguous arcs covering exactly one turn.
    pub arcs: Vec<Vec<Arc>>,
    pub step_length: f64,
    pub n_steps: usize,
    /// Arcs whose reward is at or below this value act as barriers.
    pub barrier_value: f64,
}

impl Default for LabyrinthConfig {
    fn default() -> Self {
        let a = Arc::new;
        LabyrinthConfig {
            radii: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            arcs: vec![
                vec![a(0.0, 90.0, 3.0), a(90.0, 180.0, 1.0), a(180.0, 270.0, 2.0), a(270.0, 360.0, 1.0)],
                vec![a(0.0, 120.0, 6.0), a(120.0, 240.0, 3.0), a(240.0, 360.0, 4.0)],
                vec![
                    a(0.0, 100.0, 10.0),
                    a(100.0, 150.0, 6.0),
                    a(150.0, 170.0, -100.0),
                    a(170.0, 280.0, 5.0),
                    a(280.0, 360.0, 8.0),
                ],
                vec![
                    a(0.0, 80.0, 30.0),
                    a(80.0, 105.0, -100.0),
                    a(105.0, 200.0, 18.0),
                    a(200.0, 225.0, -100.0),
                    a(225.0, 360.0, 22.0),
                ],
                vec![
                    a(0.0, 70.0, 90.0),
                    a(70.0, 100.0, -100.0),
                    a(100.0, 200.0, 50.0),
                    a(200.0, 230.0, -100.0),
                    a(230.0, 360.0, 65.0),
                ],
            ],
            step_length: 1.0,
            n_steps: 10,
            barrier_value: -100.0,
        }
    }
}

impl LabyrinthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::config("labyrinth needs at least one circle"));
        }
        if self.radii.len() != self.arcs.len() {
            return Err(Error::config(format!(
                "{} radii but {} arc tables",
                self.radii.len(),
                self.arcs.len()
            )));
        }
        if !(self.radii[0] > 0.0) || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("radii must be positive and strictly increasing"));
        }
        if !(self.step_length > 0.0) || !self.step_length.is_finite() {
            return Err(Error::config("step_length must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::config("n_steps must be positive"));
        }
        for (c, table) in self.arcs.iter().enumerate() {
            if table.iter().any(|a| !a.reward.is_finite()) {
                return Err(Error::config(format!("circle {c}: non-finite reward")));
            }
            let spans: Vec<(f64, f64)> = table.iter().map(|a| (a.start, a.end)).collect();
            check_turn(&spans).map_err(|e| Error::config(format!("circle {c}: {e}")))?;
        }
        Ok(())
    }

    /// Index of the arc of circle `circle` containing the polar angle `theta`
    /// (radians).
    pub fn arc_index(&self, circle: usize, theta: f64) -> usize {
        let table = &self.arcs[circle];
        angular_index(table[0].start, table.iter().map(|a| a.end), theta)
    }

    pub fn is_barrier(&self, arc: &Arc) -> bool {
        arc.reward <= self.barrier_value
    }

    /// Copy with every arc turned by `degrees`.
    pub fn rotated(&self, degrees: f64) -> LabyrinthConfig {
        let mut out = self.clone();
        for arc in out.arcs.iter_mut().flatten() {
            arc.start += degrees;
            arc.end += degrees;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub circle: usize,
    pub arc: usize,
    pub point: [f64; 2],
    /// Position along the segment in `(0, 1]`.
    pub t: f64,
}

/// Contacts of the segment `p0 → p1` with every circle, ordered along the
/// segment.
///
/// A contact at the start point is excluded (it was reported as the end of
/// the previous step); a contact at the end point and a tangency each count
/// as one crossing.
pub fn segment_arc_crossings(p0: [f64; 2], p1: [f64; 2], cfg: &LabyrinthConfig) -> Vec<Crossing> {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let mut out = Vec::new();
    if a == 0.0 {
        return out;
    }
    let b = 2.0 * (p0[0] * d[0] + p0[1] * d[1]);
    let p0sq = p0[0] * p0[0] + p0[1] * p0[1];
    for (circle, &r) in cfg.radii.iter().enumerate() {
        let c = p0sq - r * r;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        let s = disc.sqrt();
        // numerically stable root pair
        let q = -0.5 * (b + if b >= 0.0 { s } else { -s });
        let (mut t0, mut t1) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let roots: &[f64] = if disc == 0.0 { &[t0] } else { &[t0, t1] };
        for &t in roots {
            if t > CONTACT_EPS && t <= 1.0 + CONTACT_EPS {
                let point = [p0[0] + t * d[0], p0[1] + t * d[1]];
                let arc = cfg.arc_index(circle, point[1].atan2(point[0]));
                out.push(Crossing { circle, arc, point, t });
            }
        }
    }
    out.sort_by(|x, y| x.t.total_cmp(&y.t));
    out
}

/// Total reward of the walk whose k-th step points in direction `angles[k]`.
///
/// Each rewarded arc pays once; each barrier crossing pays the barrier value
/// every time.
pub fn labyrinth_reward(angles: &[f64], cfg: &LabyrinthConfig) -> Result<f64> {
    if angles.len() != cfg.n_steps {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_steps,
            got: angles.len(),
        });
    }
    Ok(walk(angles, cfg, |_| {}))
}

/// Positions visited by the walk, starting at the origin.
pub fn labyrinth_path(angles: &[f64], cfg: &LabyrinthConfig) -> Vec<[f64; 2]> {
    let mut path = vec![[0.0, 0.0]];
    walk(angles, cfg, |p| path.push(p));
    path
}

fn walk(angles: &[f64], cfg: &LabyrinthConfig, mut visit: impl FnMut([f64; 2])) -> f64 {
    let mut collected = HashSet::new();
    let mut p = [0.0, 0.0];
    let mut total = 0.0;
    for &theta in angles {
        let q = [
            p[0] + cfg.step_length * theta.cos(),
            p[1] + cfg.step_length * theta.sin(),
        ];
        for x in segment_arc_crossings(p, q, cfg) {
            let arc = &cfg.arcs[x.circle][x.arc];
            if cfg.is_barrier(arc) {
                total += arc.reward;
            } else if collected.insert((x.circle, x.arc)) {
                total += arc.reward;
            }
        }
        visit(q);
        p = q;
    }
    total
}
