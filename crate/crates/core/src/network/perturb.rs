//! Structural and noise perturbations of a built network.
//!
//! All edits are deterministic functions of the perturbation seed and the
//! network's canonical edge/neuron order, and magnitude 0 is always the
//! identity (the unperturbed network compares equal), which lets sweeps
//! treat level 0 as a shared baseline.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::rng::derive_rng;

use super::build::{Network, Projection};
use super::spec::{Perturbation, PerturbationKind, PopId, ProjectionId, StageGroup};

fn projection_mut(net: &mut Network, id: ProjectionId) -> &mut Projection {
    match id {
        ProjectionId::LgnV1 => &mut net.lgn_v1,
        ProjectionId::V1Mt => &mut net.v1_mt,
        ProjectionId::MtLip => &mut net.mt_lip,
    }
}

fn projection_ref(net: &Network, id: ProjectionId) -> &Projection {
    match id {
        ProjectionId::LgnV1 => &net.lgn_v1,
        ProjectionId::V1Mt => &net.v1_mt,
        ProjectionId::MtLip => &net.mt_lip,
    }
}

/// Applies one perturbation, returning an edited copy. The input network
/// is left untouched; trials running on it are unaffected.
pub fn apply_perturbation(
    net: &Network,
    perturbation: &Perturbation,
    input_current_reference: Option<&InputCurrentReference>,
) -> Result<Network> {
    perturbation.validate()?;
    let mut edited = net.clone();
    match perturbation.kind {
        PerturbationKind::DropNeurons { stage, fraction } => {
            let mut rng = derive_rng(perturbation.seed, "perturb-drop-neurons", &[]);
            for &pop in stage.members() {
                let layout = *edited.pop(pop);
                for i in layout.range() {
                    if rng.random::<f64>() < fraction {
                        edited.muted[i] = true;
                    }
                }
            }
        }
        PerturbationKind::DropConnections {
            projection,
            fraction,
        } => {
            let mut rng = derive_rng(perturbation.seed, "perturb-drop-connections", &[]);
            let proj = projection_mut(&mut edited, projection);
            // Rebuild CSR keeping surviving edges; canonical source-major
            // edge order drives the Bernoulli stream.
            let n_src = proj.offsets.len() - 1;
            let mut offsets = Vec::with_capacity(proj.offsets.len());
            let mut targets = Vec::with_capacity(proj.targets.len());
            let mut weights = Vec::with_capacity(proj.weights.len());
            offsets.push(0u32);
            for src in 0..n_src {
                let lo = proj.offsets[src] as usize;
                let hi = proj.offsets[src + 1] as usize;
                for e in lo..hi {
                    if rng.random::<f64>() >= fraction {
                        targets.push(proj.targets[e]);
                        weights.push(proj.weights[e]);
                    }
                }
                offsets.push(targets.len() as u32);
            }
            *proj = Projection {
                offsets,
                targets,
                weights,
            };
        }
        PerturbationKind::WeightNoise {
            projection,
            multiplier,
        } => {
            let mean_abs = net.mean_abs_weight(projection_ref(net, projection));
            let sigma = multiplier * mean_abs;
            let mut rng = derive_rng(perturbation.seed, "perturb-weight-noise", &[]);
            let normal = Normal::new(0.0, sigma.max(0.0)).expect("sigma >= 0");
            let proj = projection_mut(&mut edited, projection);
            for w in proj.weights.iter_mut() {
                // Perturbed weights may cross zero; sign discipline is
                // deliberately broken by this manipulation.
                *w += normal.sample(&mut rng) as f32;
            }
        }
        PerturbationKind::CurrentNoise { stage, multiplier } => {
            let reference = input_current_reference.ok_or_else(|| {
                crate::error::Error::Config(
                    "CurrentNoise requires an input-current reference from a calibration run"
                        .into(),
                )
            })?;
            let sigma = multiplier * reference.mean_abs(stage);
            for &pop in stage.members() {
                let layout = *edited.pop(pop);
                for i in layout.range() {
                    edited.current_noise_sigma[i] = sigma as f32;
                }
            }
        }
    }
    Ok(edited)
}

/// Mean absolute input current per stage, pA, measured from an
/// unperturbed calibration trial. Scales the CurrentNoise sigma.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InputCurrentReference {
    pub lgn: f64,
    pub v1: f64,
    pub mt: f64,
    pub lip: f64,
}

impl InputCurrentReference {
    pub fn mean_abs(&self, stage: StageGroup) -> f64 {
        match stage {
            StageGroup::Lgn => self.lgn,
            StageGroup::V1 => self.v1,
            StageGroup::Mt => self.mt,
            StageGroup::Lip => self.lip,
        }
    }
}

/// Runs one unperturbed trial and averages |input current| over neurons
/// and steps for each stage. The input current is everything a neuron
/// receives: stimulus drive, background noise, synaptic currents, and any
/// external stimulation.
pub fn measure_input_current(
    net: &Network,
    drive: &crate::lgn::LgnDrive,
    params: &super::trial::TrialParams,
    seed: u64,
) -> Result<InputCurrentReference> {
    let totals = super::trial::run_trial_measuring_current(net, drive, params, seed)?;
    let mut sums = [0.0f64; 4];
    let mut counts = [0.0f64; 4];
    for (pop_idx, &pop) in PopId::ALL.iter().enumerate() {
        let stage_idx = match pop {
            PopId::LgnOn | PopId::LgnOff => 0,
            PopId::V1G1 | PopId::V1G2 => 1,
            PopId::MtL | PopId::MtR => 2,
            PopId::LipA | PopId::LipB | PopId::LipI => 3,
        };
        sums[stage_idx] += totals.abs_current_sum[pop_idx];
        counts[stage_idx] += totals.sample_count[pop_idx];
    }
    Ok(InputCurrentReference {
        lgn: sums[0] / counts[0],
        v1: sums[1] / counts[1],
        mt: sums[2] / counts[2],
        lip: sums[3] / counts[3],
    })
}
