//! The four-stage sensorimotor network: LGN -> V1 -> MT -> LIP.
//!
//! - [`spec`]: declarative description of populations, projections, and
//!   noise; everything needed to rebuild a network deterministically.
//! - [`build`]: realizes a [`spec::NetworkSpec`] into weight tables.
//! - [`perturb`]: structural edits (neuron/connection drops, weight and
//!   current noise) and constant-current microstimulation targets.
//! - [`trial`]: the vectorized simulation loop that turns LGN drive into
//!   a behavioral choice with a decision time.
//!
//! Stage roles: paired ON/OFF afferents with unequal response latencies
//! make each V1 cell direction selective; MT pools V1 cells of one
//! preference; the recurrent LIP stage integrates the two MT streams in
//! competing excitatory pools until one crosses a rate threshold, which is
//! read out as the choice.

mod build;
mod perturb;
pub mod spec;
mod trial;

pub use build::{build_network, Network, Projection};
pub use perturb::{apply_perturbation, measure_input_current, InputCurrentReference};
pub use spec::{
    Microstimulation, MicrostimTarget, NetworkSpec, Perturbation, PerturbationKind, PopId,
    ProjectionId, StageGroup,
};
pub use trial::{run_trial, PopTrace, TrialParams, TrialResult};

#[cfg(test)]
pub(crate) use build::tests::small_spec;
