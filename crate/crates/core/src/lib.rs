//! Stochastic policy search on hyperbolic action spaces.
//!
//! Policies are configurations of points in the Poincaré disc. Each point
//! parameterizes a probability law (a Gaussian on the line, a wrapped Cauchy
//! law on the circle, or a conformally natural law on the disc), and the
//! configuration is moved by Poincaré-swarm dynamics whose couplings are
//! trained with CMA-ES.

pub mod cmaes;
pub mod dist;
pub mod envs;
pub mod error;
pub mod geom;
pub mod runner;
pub mod stats;
pub mod swarm;

pub use error::{Error, Result};
