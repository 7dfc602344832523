//! Particle swarm optimization instrumented for statistical inference.
//!
//! The crate runs the classical PSO dynamics with deterministic, seeded noise,
//! records full trajectories, sorts particles into the oscillatory and
//! converging regimes, and turns the three central limit theorems for PSO
//! into estimators with confidence intervals and regions around the optima
//! found by the swarm. The [`experiments`] module reproduces the Himmelblau
//! Monte Carlo studies end to end.

pub mod cli;
pub mod clt;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod objectives;
pub mod regime;
pub mod rng;
pub mod stats;
pub mod swarm;
pub mod trajectory;

pub use error::{Error, Result};
pub use objectives::{Objective, Registry};
pub use swarm::{Domain, NoiseDraw, NoiseModel, PsoParams, SwarmState, TopologyKind, TopologySpec};
pub use trajectory::Trajectory;
