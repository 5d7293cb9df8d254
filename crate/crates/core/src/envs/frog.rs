//! Jumping games on the real line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpot {
    pub position: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrogConfig {
    pub reward_spots: Vec<RewardSpot>,
    pub capture_radius: f64,
    pub jump_cost: f64,
    /// Jumps with `|x|` at or below this length are free.
    pub free_jump_threshold: f64,
    pub bounds: [f64; 2],
    pub out_of_bounds_penalty: f64,
}

impl Default for FrogConfig {
    fn default() -> Self {
        FrogConfig {
            reward_spots: vec![
                RewardSpot { position: 1.0, value: 2.0 },
                RewardSpot { position: 3.0, value: 3.0 },
                RewardSpot { position: 5.0, value: 3.0 },
            ],
            capture_radius: 0.25,
            jump_cost: 1.0,
            free_jump_threshold: 0.0,
            bounds: [-1.0, 8.0],
            out_of_bounds_penalty: 10.0,
        }
    }
}

impl FrogConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bounds;
        if !(lo < hi) {
            return Err(Error::config(format!("frog bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if !(self.capture_radius > 0.0) {
            return Err(Error::config("capture_radius must be positive"));
        }
        if !(self.free_jump_threshold >= 0.0) {
            return Err(Error::config("free_jump_threshold must be non-negative"));
        }
        let finite = [self.jump_cost, self.out_of_bounds_penalty]
            .iter()
            .chain(self.reward_spots.iter().flat_map(|s| [&s.position, &s.value]))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("frog configuration contains non-finite values"));
        }
        Ok(())
    }

    fn out_of_bounds(&self, x: f64) -> bool {
        x < self.bounds[0] || x > self.bounds[1]
    }

    fn near(&self, x: f64, spot: &RewardSpot) -> bool {
        (x - spot.position).abs() <= self.capture_radius
    }
}

/// Total reward of a jump sequence starting at 0.
///
/// After every jump each not-yet-collected spot within the capture radius
/// pays once; jumps longer than the free threshold cost `jump_cost`; landing
/// outside the bounds costs the penalty for that jump.
pub fn frog_reward(jumps: &[f64], cfg: &FrogConfig) -> f64 {
    let mut collected = vec![false; cfg.reward_spots.len()];
    let mut position = 0.0;
    let mut total = 0.0;
    for &jump in jumps {
        position += jump;
        for (taken, spot) in collected.iter_mut().zip(&cfg.reward_spots) {
            if !*taken && cfg.near(position, spot) {
                *taken = true;
                total += spot.value;
            }
        }
        if jump.abs() > cfg.free_jump_threshold {
            total -= cfg.jump_cost;
        }
        if cfg.out_of_bounds(position) {
            total -= cfg.out_of_bounds_penalty;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TwoFrogFile", into = "TwoFrogFile")]
pub struct TwoFrogConfig {
    pub frog: FrogConfig,
    pub long_jump_threshold: f64,
    pub long_jump_cost: f64,
    pub collision_radius: f64,
}

/// Flat on-disk form of [`TwoFrogConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoFrogFile {
    reward_spots: Vec<RewardSpot>,
    capture_radius: f64,
    jump_cost: f64,
    free_jump_threshold: f64,
    bounds: [f64; 2],
    out_of_bounds_penalty: f64,
    long_jump_threshold: f64,
    long_jump_cost: f64,
    collision_radius: f64,
}

impl From<TwoFrogFile> for TwoFrogConfig {
    fn from(f: TwoFrogFile) -> Self {
        TwoFrogConfig {
            frog: FrogConfig {
                reward_spots: f.reward_spots,
                capture_radius: f.capture_radius,
                jump_cost: f.jump_cost,
                free_jump_threshold: f.free_jump_threshold,
                bounds: f.bounds,
                out_of_bounds_penalty: f.out_of_bounds_penalty,
            },
            long_jump_threshold: f.long_jump_threshold,
            long_jump_cost: f.long_jump_cost,
            collision_radius: f.collision_radius,
        }
    }
}

impl From<TwoFrogConfig> for TwoFrogFile {
    fn from(c: TwoFrogConfig) -> Self {
        TwoFrogFile {
            reward_spots: c.frog.reward_spots,
            capture_radius: c.frog.capture_radius,
            jump_cost: c.frog.jump_cost,
            free_jump_threshold: c.frog.free_jump_threshold,
            bounds: c.frog.bounds,
            out_of_bounds_penalty: c.frog.out_of_bounds_penalty,
            long_jump_threshold: c.long_jump_threshold,
            long_jump_cost: c.long_jump_cost,
            collision_radius: c.collision_radius,
        }
    }
}

impl Default for TwoFrogConfig {
    fn default() -> Self {
        TwoFrogConfig {
            frog: FrogConfig::default(),
            long_jump_threshold: 3.0,
            long_jump_cost: 2.0,
            collision_radius: 0.25,
        }
    }
}

impl TwoFrogConfig {
    pub fn validate(&self) -> Result<()> {
        self.frog.validate()?;
        if !(self.long_jump_threshold >= self.frog.free_jump_threshold) {
            return Err(Error::config("long_jump_threshold must not be below free_jump_threshold"));
        }
        if !(self.collision_radius > 0.0) || !self.long_jump_cost.is_finite() {
            return Err(Error::config("collision_radius must be positive and costs finite"));
        }
        Ok(())
    }

    fn jump_cost(&self, jump: f64) -> f64 {
        let len = jump.abs();
        if len > self.long_jump_threshold {
            self.long_jump_cost
        } else if len > self.frog.free_jump_threshold {
            self.frog.jump_cost
        } else {
            0.0
        }
    }
}

/// Rewards of two frogs jumping simultaneously.
///
/// Every spot holds one private reward per player. When both players sit
/// within the capture radius of the same spot and within the collision
/// radius of each other, neither collects it and both rewards stay.
pub fn two_frog_rewards(jumps_a: &[f64], jumps_b: &[f64], cfg: &TwoFrogConfig) -> Result<(f64, f64)> {
    if jumps_a.len() != jumps_b.len() {
        return Err(Error::DimensionMismatch {
            expected: jumps_a.len(),
            got: jumps_b.len(),
        });
    }
    let spots = &cfg.frog.reward_spots;
    let mut taken = [vec![false; spots.len()], vec![false; spots.len()]];
    let mut pos = [0.0, 0.0];
    let mut total = [0.0, 0.0];
    for (&ja, &jb) in jumps_a.iter().zip(jumps_b) {
        let jumps = [ja, jb];
        for p in 0..2 {
            pos[p] += jumps[p];
        }
        let colliding = (pos[0] - pos[1]).abs() <= cfg.collision_radius;
        for (s, spot) in spots.iter().enumerate() {
            let near = [cfg.frog.near(pos[0], spot), cfg.frog.near(pos[1], spot)];
            if colliding && near[0] && near[1] {
                continue;
            }
            for p in 0..2 {
                if near[p] && !taken[p][s] {
                    taken[p][s] = true;
                    total[p] += spot.value;
                }
            }
        }
        for p in 0..2 {
            total[p] -= cfg.jump_cost(jumps[p]);
            if cfg.frog.out_of_bounds(pos[p]) {
                total[p] -= cfg.frog.out_of_bounds_penalty;
            }
        }
    }
    Ok((total[0], total[1]))
}
