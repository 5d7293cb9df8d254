//! Maps between CMA-ES parameter vectors and swarm specifications.
//!
//! Disc points never come straight from the parameter vector; a decoded
//! policy is a dynamics specification that moves seeded initial points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::reduce_angle;
use crate::swarm::{KuramotoChainSpec, SubSwarmSpec, SwarmSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum PolicyLayout {
    /// Symmetric `n × n` couplings and phase shifts, upper triangles with the
    /// diagonal, then ω.
    FullSwarm { n: usize },
    /// Symmetric `p × p` sub-swarm couplings and phase shifts, then ω.
    SubSwarm { sizes: Vec<usize> },
    /// ω, then the `n − 1` neighbour couplings of a Kuramoto chain.
    KuramotoChain { n: usize },
    /// ω (decoded as `|ω|`), then the `n − 1` couplings of a Poincaré swarm
    /// whose coupling matrix is tridiagonal and whose phase shifts are zero.
    PoincareChain { n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodedPolicy {
    Swarm(SwarmSpec),
    SubSwarm(SubSwarmSpec),
    Kuramoto(KuramotoChainSpec),
}

fn triangle(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Fills a symmetric row-major matrix from its upper triangle.
fn symmetric(n: usize, upper: &[f64], map: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let mut it = upper.iter();
    for j in 0..n {
        for k in j..n {
            let v = map(*it.next().expect("upper triangle has n(n+1)/2 entries"));
            m[j * n + k] = v;
            m[k * n + j] = v;
        }
    }
    m
}

fn upper(n: usize, get: impl Fn(usize, usize) -> f64) -> impl Iterator<Item = f64> {
    (0..n).flat_map(move |j| (j..n).map(move |k| (j, k))).map(move |(j, k)| get(j, k))
}

impl PolicyLayout {
    pub fn dim(&self) -> usize {
        match self {
            PolicyLayout::FullSwarm { n } => 2 * triangle(*n) + 1,
            PolicyLayout::SubSwarm { sizes } => 2 * triangle(sizes.len()) + 1,
            PolicyLayout::KuramotoChain { n } | PolicyLayout::PoincareChain { n } => *n,
        }
    }

    /// Number of oscillators the decoded dynamics moves.
    pub fn oscillators(&self) -> usize {
        match self {
            PolicyLayout::FullSwarm { n } | PolicyLayout::KuramotoChain { n } | PolicyLayout::PoincareChain { n } => *n,
            PolicyLayout::SubSwarm { sizes } => sizes.iter().sum(),
        }
    }

    pub fn decode(&self, x: &[f64]) -> Result<DecodedPolicy> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self {
            PolicyLayout::FullSwarm { n } => {
                let t = triangle(*n);
                let k = symmetric(*n, &x[..t], |v| v);
                let b = symmetric(*n, &x[t..2 * t], reduce_angle);
                Ok(DecodedPolicy::Swarm(SwarmSpec::new(*n, x[2 * t], k, b)?))
            }
            PolicyLayout::SubSwarm { sizes } => {
                let p = sizes.len();
                let t = triangle(p);
                let k = symmetric(p, &x[..t], |v| v);
                let b = symmetric(p, &x[t..2 * t], reduce_angle);
                Ok(DecodedPolicy::SubSwarm(SubSwarmSpec::new(sizes.clone(), x[2 * t], k, b)?))
            }
            PolicyLayout::KuramotoChain { .. } => {
                Ok(DecodedPolicy::Kuramoto(KuramotoChainSpec::new(x[0], x[1..].to_vec())?))
            }
            PolicyLayout::PoincareChain { n } => {
                let mut k = vec![0.0; n * n];
                for (j, &c) in x[1..].iter().enumerate() {
                    k[j * n + j + 1] = c;
                    k[(j + 1) * n + j] = c;
                }
                Ok(DecodedPolicy::Swarm(SwarmSpec::new(*n, x[0].abs(), k, vec![0.0; n * n])?))
            }
        }
    }

    /// Inverse of [`PolicyLayout::decode`] on decoded policies.
    pub fn encode(&self, policy: &DecodedPolicy) -> Result<Vec<f64>> {
        let mismatch = || Error::param(format!("policy does not match layout {self:?}"));
        match (self, policy) {
            (PolicyLayout::FullSwarm { n }, DecodedPolicy::Swarm(s)) if s.n() == *n => {
                let mut x: Vec<f64> = upper(*n, |j, k| s.coupling(j, k)).collect();
                x.extend(upper(*n, |j, k| s.phase_shift(j, k)));
                x.push(s.omega());
                Ok(x)
            }
            (PolicyLayout::SubSwarm { sizes }, DecodedPolicy::SubSwarm(s)) if s.sizes() == sizes.as_slice() => {
                let p = sizes.len();
                let mut x: Vec<f64> = upper(p, |l, m| s.coupling(l, m)).collect();
                x.extend(upper(p, |l, m| s.phase_shift(l, m)));
                x.push(s.omega());
                Ok(x)
            }
            (PolicyLayout::KuramotoChain { n }, DecodedPolicy::Kuramoto(c)) if c.n() == *n => {
                let mut x = vec![c.omega()];
                x.extend_from_slice(c.couplings());
                Ok(x)
            }
            (PolicyLayout::PoincareChain { n }, DecodedPolicy::Swarm(s)) if s.n() == *n => {
                let mut x = vec![s.omega()];
                x.extend((0..n - 1).map(|j| s.coupling(j, j + 1)));
                Ok(x)
            }
            _ => Err(mismatch()),
        }
    }
}
