//! Spiking-network model of visual motion discrimination.
//!
//! The crate is organized as a feed-forward pipeline plus analysis and
//! orchestration layers:
//!
//! - [`stimulus`]: random-dot-kinematogram (RDK) movie synthesis and the
//!   on-disk dataset format.
//! - [`lgn`]: center-surround spatial filtering and biphasic temporal
//!   filtering that turn a movie into per-cell drive currents.
//! - [`neuron`]: leaky integrate-and-fire dynamics, conductance synapse
//!   kinetics, and Ornstein-Uhlenbeck background current.
//! - [`network`]: population wiring (LGN -> V1 -> MT -> LIP), structural
//!   perturbations, and the per-trial simulation loop.
//! - [`behavior`]: psychometric fitting, decision-time summaries, and the
//!   regression utilities used to score parameter sweeps.
//! - [`experiments`]: sweep planning, parallel execution, result export,
//!   and byte-exact replay.
//! - [`config`]: layered run configuration, validation, and the run
//!   manifest that makes every invocation reproducible.
//! - [`rng`]: deterministic derivation of independent named RNG streams
//!   from a single master seed.

pub mod behavior;
pub mod config;
pub mod error;
pub mod experiments;
pub mod lgn;
pub mod network;
pub mod neuron;
pub mod rng;
pub mod stimulus;

pub use error::{Error, Result};
