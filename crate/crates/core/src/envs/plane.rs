//! Two-player game on the plane: each player controls one coordinate of the
//! sum point through three numbers.

use serde::{Deserialize, Serialize};

use super::{angular_index, check_turn};
use crate::error::{Error, Result};

/// Angular field of an annulus, angles in degrees, half-open `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    pub start: f64,
    pub end: f64,
    pub reward_a: f64,
    pub reward_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annulus {
    pub r_in: f64,
    pub r_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneGameConfig {
    pub annuli: Vec<Annulus>,
    /// Per annulus, contiguous fields covering exactly one turn.
    pub fields: Vec<Vec<Field>>,
}

impl Default for PlaneGameConfig {
    /// Symmetric under swapping the players, which reflects the plane in the
    /// diagonal. The outer ring holds the (2,2) compromise on the diagonal and
    /// the two one-sided fields (0,3) and (3,0) on the anti-diagonal.
    fn default() -> Self {
        let f = |start: f64, end: f64, reward_a: f64, reward_b: f64| Field {
            start,
            end,
            reward_a,
            reward_b,
        };
        PlaneGameConfig {
            annuli: vec![Annulus { r_in: 0.0, r_out: 1.0 }, Annulus { r_in: 2.0, r_out: 3.0 }],
            fields: vec![
                vec![f(0.0, 360.0, 1.0, 1.0)],
                vec![
                    f(-22.5, 22.5, 1.0, 1.0),
                    f(22.5, 67.5, 2.0, 2.0),
                    f(67.5, 112.5, 1.0, 1.0),
                    f(112.5, 157.5, 0.0, 3.0),
                    f(157.5, 202.5, 1.0, 1.0),
                    f(202.5, 247.5, 1.0, 1.0),
                    f(247.5, 292.5, 1.0, 1.0),
                    f(292.5, 337.5, 3.0, 0.0),
                ],
            ],
        }
    }
}

impl PlaneGameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.annuli.len() != self.fields.len() {
            return Err(Error::config(format!(
                "{} annuli but {} field tables",
                self.annuli.len(),
                self.fields.len()
            )));
        }
        for (i, ann) in self.annuli.iter().enumerate() {
            if !(ann.r_in >= 0.0 && ann.r_in < ann.r_out && ann.r_out.is_finite()) {
                return Err(Error::config(format!("annulus {i}: need 0 <= r_in < r_out")));
            }
        }
        for w in self.annuli.windows(2) {
            if w[1].r_in < w[0].r_out {
                return Err(Error::config("annuli must be ordered and disjoint"));
            }
        }
        for (i, table) in self.fields.iter().enumerate() {
            if table.iter().any(|f| !f.reward_a.is_finite() || !f.reward_b.is_finite()) {
                return Err(Error::config(format!("annulus {i}: non-finite reward")));
            }
            let spans: Vec<(f64, f64)> = table.iter().map(|f| (f.start, f.end)).collect();
            check_turn(&spans).map_err(|e| Error::config(format!("annulus {i}: {e}")))?;
        }
        Ok(())
    }

    /// Rewards at the point `p`, zero outside every annulus.
    pub fn rewards_at(&self, p: [f64; 2]) -> (f64, f64) {
        let r = p[0].hypot(p[1]);
        let Some(i) = self.annuli.iter().position(|a| a.r_in <= r && r <= a.r_out) else {
            return (0.0, 0.0);
        };
        let table = &self.fields[i];
        let k = angular_index(table[0].start, table.iter().map(|f| f.end), p[1].atan2(p[0]));
        (table[k].reward_a, table[k].reward_b)
    }
}

/// Rewards of both players for the point `(Σa, Σb)`.
pub fn plane_game_rewards(a: &[f64; 3], b: &[f64; 3], cfg: &PlaneGameConfig) -> (f64, f64) {
    cfg.rewards_at([a.iter().sum(), b.iter().sum()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn polar(r: f64, deg: f64) -> [f64; 3] {
        [r * deg.to_radians().cos(), 0.0, 0.0]
    }

    #[test]
    fn default_is_valid() {
        PlaneGameConfig::default().validate().unwrap();
    }

    #[test]
    fn shaded_regions_pay_nothing() {
        let cfg = PlaneGameConfig::default();
        assert_eq!(plane_game_rewards(&[1.5, 0.0, 0.0], &[0.0; 3], &cfg), (0.0, 0.0));
        assert_eq!(plane_game_rewards(&[0.0; 3], &[4.0, 0.0, 0.0], &cfg), (0.0, 0.0));
    }

    #[test]
    fn compromise_field() {
        let cfg = PlaneGameConfig::default();
        let a = polar(2.5, 45.0);
        let b = [0.0, 2.5 * (45.0f64).to_radians().sin(), 0.0];
        assert_eq!(plane_game_rewards(&a, &b, &cfg), (2.0, 2.0));
    }

    #[test]
    fn one_sided_fields() {
        let cfg = PlaneGameConfig::default();
        assert_eq!(cfg.rewards_at([-1.8, 1.8]), (0.0, 3.0));
        assert_eq!(cfg.rewards_at([1.8, -1.8]), (3.0, 0.0));
        assert_eq!(cfg.rewards_at([2.5, 0.0]), (1.0, 1.0));
        assert_eq!(cfg.rewards_at([0.3, -0.2]), (1.0, 1.0));
    }

    #[test]
    fn annulus_edges_are_closed() {
        let cfg = PlaneGameConfig::default();
        assert_eq!(cfg.rewards_at([1.0, 0.0]), (1.0, 1.0));
        assert_eq!(cfg.rewards_at([0.0, 3.0]), (1.0, 1.0));
    }

    #[test]
    fn validation_rejects_overlapping_annuli() {
        let mut cfg = PlaneGameConfig::default();
        cfg.annuli[1].r_in = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = PlaneGameConfig::default();
        cfg.fields[1].remove(3);
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn depends_only_on_sums(a in prop::array::uniform3(-128i32..128), b in prop::array::uniform3(-128i32..128)) {
            // dyadic values keep every permuted sum exact
            let a = a.map(|v| f64::from(v) / 64.0);
            let b = b.map(|v| f64::from(v) / 64.0);
            let cfg = PlaneGameConfig::default();
            let pa = [a[2], a[0], a[1]];
            let pb = [b[1], b[2], b[0]];
            prop_assert_eq!(plane_game_rewards(&a, &b, &cfg), plane_game_rewards(&pa, &pb, &cfg));
        }

        #[test]
        fn swapping_players_swaps_rewards(x in -3.5..3.5f64, y in -3.5..3.5f64) {
            let cfg = PlaneGameConfig::default();
            let (ra, rb) = cfg.rewards_at([x, y]);
            let (sa, sb) = cfg.rewards_at([y, x]);
            prop_assert_eq!((ra, rb), (sb, sa));
        }
    }
}
