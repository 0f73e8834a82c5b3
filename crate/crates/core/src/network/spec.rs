//! Declarative network description.
//!
//! A [`NetworkSpec`] plus its seed fully determines the realized network:
//! population sizes, wiring rules, mean conductances, the weight sampling
//! distribution, and per-population background noise. Experiment sweeps
//! edit spec fields (conductance multipliers, connection fractions, Hebb
//! weights) and rebuild.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::{KineticsSet, NeuronParams, OuNoiseParams};

/// Population identifiers, in simulation layout order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopId {
    LgnOn,
    LgnOff,
    V1G1,
    V1G2,
    MtL,
    MtR,
    LipA,
    LipB,
    LipI,
}

impl PopId {
    pub const ALL: [PopId; 9] = [
        PopId::LgnOn,
        PopId::LgnOff,
        PopId::V1G1,
        PopId::V1G2,
        PopId::MtL,
        PopId::MtR,
        PopId::LipA,
        PopId::LipB,
        PopId::LipI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PopId::LgnOn => "lgn_on",
            PopId::LgnOff => "lgn_off",
            PopId::V1G1 => "v1_g1",
            PopId::V1G2 => "v1_g2",
            PopId::MtL => "mt_l",
            PopId::MtR => "mt_r",
            PopId::LipA => "lip_a",
            PopId::LipB => "lip_b",
            PopId::LipI => "lip_i",
        }
    }

    /// Inhibitory populations use the interneuron membrane parameters.
    pub fn is_inhibitory(self) -> bool {
        matches!(self, PopId::LipI)
    }
}

/// Anatomical stage groups used as perturbation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageGroup {
    Lgn,
    V1,
    Mt,
    Lip,
}

impl StageGroup {
    pub fn members(self) -> &'static [PopId] {
        match self {
            StageGroup::Lgn => &[PopId::LgnOn, PopId::LgnOff],
            StageGroup::V1 => &[PopId::V1G1, PopId::V1G2],
            StageGroup::Mt => &[PopId::MtL, PopId::MtR],
            StageGroup::Lip => &[PopId::LipA, PopId::LipB, PopId::LipI],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StageGroup::Lgn => "lgn",
            StageGroup::V1 => "v1",
            StageGroup::Mt => "mt",
            StageGroup::Lip => "lip",
        }
    }
}

/// Feed-forward projections addressable by structural perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionId {
    LgnV1,
    V1Mt,
    MtLip,
}

impl ProjectionId {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionId::LgnV1 => "lgn_v1",
            ProjectionId::V1Mt => "v1_mt",
            ProjectionId::MtLip => "mt_lip",
        }
    }
}

/// Population sizes. The wiring rules constrain them: the LGN classes form
/// a square lattice, V1 groups form the half-resolution square lattice,
/// and MT groups form a square lattice whose patches fit inside V1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSizes {
    pub lgn_on: usize,
    pub lgn_off: usize,
    pub v1_g1: usize,
    pub v1_g2: usize,
    pub mt_l: usize,
    pub mt_r: usize,
    pub lip_a: usize,
    pub lip_b: usize,
    pub lip_i: usize,
}

impl Default for PopulationSizes {
    fn default() -> Self {
        PopulationSizes {
            lgn_on: 10_000,
            lgn_off: 10_000,
            v1_g1: 2_500,
            v1_g2: 2_500,
            mt_l: 400,
            mt_r: 400,
            lip_a: 300,
            lip_b: 300,
            lip_i: 500,
        }
    }
}

impl PopulationSizes {
    pub fn count(&self, id: PopId) -> usize {
        match id {
            PopId::LgnOn => self.lgn_on,
            PopId::LgnOff => self.lgn_off,
            PopId::V1G1 => self.v1_g1,
            PopId::V1G2 => self.v1_g2,
            PopId::MtL => self.mt_l,
            PopId::MtR => self.mt_r,
            PopId::LipA => self.lip_a,
            PopId::LipB => self.lip_b,
            PopId::LipI => self.lip_i,
        }
    }
}

/// Mean synaptic conductances and wiring constants, nS unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionParams {
    /// LGN -> V1 AMPA mean conductance (free constant, calibrated).
    pub g_lgn_v1: f64,
    /// V1 -> MT AMPA mean conductance.
    pub g_v1_mt: f64,
    /// MT -> LIP AMPA mean conductance.
    pub g_mt_lip: f64,
    /// Probability that a given MT cell contacts a given LIP cell.
    pub mt_lip_fraction: f64,
    /// Edge length of the square V1 patch feeding one MT cell.
    pub v1_mt_patch: usize,
    /// LIP excitatory -> excitatory mean conductances.
    pub g_lip_ee_ampa: f64,
    pub g_lip_ee_nmda: f64,
    /// LIP excitatory -> inhibitory mean conductances.
    pub g_lip_ei_ampa: f64,
    pub g_lip_ei_nmda: f64,
    /// LIP inhibitory -> excitatory GABA mean conductance (free constant,
    /// calibrated).
    pub g_lip_ie_gaba: f64,
    /// Multiplier on recurrent weights within the same choice pool.
    pub hebb_strong: f64,
    /// Multiplier on recurrent weights across choice pools.
    pub hebb_weak: f64,
    /// Weight sampling: w ~ N(mean, (sd_ratio * mean)^2), w <= 0 removed.
    pub weight_sd_ratio: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams {
            g_lgn_v1: 10.0,
            g_v1_mt: 2.0,
            g_mt_lip: 0.1,
            mt_lip_fraction: 0.5,
            v1_mt_patch: 5,
            g_lip_ee_ampa: 0.05,
            g_lip_ee_nmda: 0.165,
            g_lip_ei_ampa: 0.04,
            g_lip_ei_nmda: 0.13,
            g_lip_ie_gaba: 1.3,
            hebb_strong: 1.3,
            hebb_weak: 0.7,
            weight_sd_ratio: 0.5,
        }
    }
}

/// Complete declarative network description.
///
/// The seed precedes the sub-tables so the struct serializes cleanly to
/// TOML (values must come before tables).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSpec {
    /// Wiring and weight-sampling seed.
    pub seed: u64,
    pub sizes: PopulationSizes,
    pub projections: ProjectionParams,
    pub kinetics: KineticsSet,
    /// Membrane constants for every excitatory population.
    pub neuron_excitatory: NeuronParams,
    /// Membrane constants for the inhibitory population.
    pub neuron_inhibitory: NeuronParams,
    /// Background current for every population except LIP excitatory.
    pub noise_standard: OuNoiseParams,
    /// Background current for LIP excitatory cells (higher mean keeps the
    /// integrator pools near their competition regime).
    pub noise_lip_e: OuNoiseParams,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            seed: 0,
            sizes: PopulationSizes::default(),
            projections: ProjectionParams::default(),
            kinetics: KineticsSet::default(),
            neuron_excitatory: NeuronParams::excitatory(),
            neuron_inhibitory: NeuronParams::inhibitory(),
            noise_standard: OuNoiseParams::standard(),
            noise_lip_e: OuNoiseParams::elevated(),
        }
    }
}

impl NetworkSpec {
    pub fn neuron_params(&self, id: PopId) -> NeuronParams {
        if id.is_inhibitory() {
            self.neuron_inhibitory
        } else {
            self.neuron_excitatory
        }
    }

    pub fn noise_params(&self, id: PopId) -> OuNoiseParams {
        match id {
            PopId::LipA | PopId::LipB => self.noise_lip_e,
            _ => self.noise_standard,
        }
    }

    /// LGN lattice edge (cells per side). Both classes share the lattice.
    pub fn lgn_side(&self) -> usize {
        (self.sizes.lgn_on as f64).sqrt().round() as usize
    }

    /// V1 lattice edge; V1 sits on every other LGN row and column.
    pub fn v1_side(&self) -> usize {
        (self.sizes.v1_g1 as f64).sqrt().round() as usize
    }

    /// MT lattice edge.
    pub fn mt_side(&self) -> usize {
        (self.sizes.mt_l as f64).sqrt().round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::NetworkBuild(msg));
        for id in PopId::ALL {
            if self.sizes.count(id) == 0 {
                return fail(format!("population {} must be nonempty", id.name()));
            }
        }
        let lgn = self.lgn_side();
        if lgn * lgn != self.sizes.lgn_on || self.sizes.lgn_off != self.sizes.lgn_on {
            return fail(format!(
                "LGN classes must be equal square lattices, got on={} off={}",
                self.sizes.lgn_on, self.sizes.lgn_off
            ));
        }
        let v1 = self.v1_side();
        if v1 * v1 != self.sizes.v1_g1 || self.sizes.v1_g2 != self.sizes.v1_g1 {
            return fail(format!(
                "V1 groups must be equal square lattices, got g1={} g2={}",
                self.sizes.v1_g1, self.sizes.v1_g2
            ));
        }
        if v1 * 2 != lgn {
            return fail(format!(
                "V1 lattice ({v1}) must be half the LGN lattice ({lgn}) per side"
            ));
        }
        let mt = self.mt_side();
        if mt * mt != self.sizes.mt_l || self.sizes.mt_r != self.sizes.mt_l {
            return fail(format!(
                "MT groups must be equal square lattices, got l={} r={}",
                self.sizes.mt_l, self.sizes.mt_r
            ));
        }
        let p = &self.projections;
        if p.v1_mt_patch == 0 || p.v1_mt_patch > v1 {
            return fail(format!(
                "V1->MT patch {} must lie in 1..={v1}",
                p.v1_mt_patch
            ));
        }
        if mt > 1 && p.v1_mt_patch >= v1 {
            return fail("V1->MT patch leaves no room to tile MT".into());
        }
        if !(0.0..=1.0).contains(&p.mt_lip_fraction) {
            return fail(format!(
                "mt_lip_fraction {} outside [0, 1]",
                p.mt_lip_fraction
            ));
        }
        for (name, g) in [
            ("g_lgn_v1", p.g_lgn_v1),
            ("g_v1_mt", p.g_v1_mt),
            ("g_mt_lip", p.g_mt_lip),
            ("g_lip_ee_ampa", p.g_lip_ee_ampa),
            ("g_lip_ee_nmda", p.g_lip_ee_nmda),
            ("g_lip_ei_ampa", p.g_lip_ei_ampa),
            ("g_lip_ei_nmda", p.g_lip_ei_nmda),
            ("g_lip_ie_gaba", p.g_lip_ie_gaba),
            ("hebb_strong", p.hebb_strong),
            ("hebb_weak", p.hebb_weak),
            ("weight_sd_ratio", p.weight_sd_ratio),
        ] {
            if !(g >= 0.0) || !g.is_finite() {
                return fail(format!("{name} must be finite and >= 0, got {g}"));
            }
        }
        self.kinetics.validate()?;
        self.neuron_excitatory.validate()?;
        self.neuron_inhibitory.validate()?;
        self.noise_standard.validate()?;
        self.noise_lip_e.validate()?;
        Ok(())
    }

    /// Stable hash of the spec content (used to key calibration caches
    /// and network snapshots).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("spec serialization cannot fail");
        hex::encode(&Sha256::digest(&json)[..16])
    }
}

/// Constant-current stimulation of a population subset for the whole
/// stimulus window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Microstimulation {
    pub target: MicrostimTarget,
    /// Added current per neuron, pA.
    pub amplitude_pa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicrostimTarget {
    MtL,
    MtR,
    MtAll,
    V1All,
    LipE,
}

impl MicrostimTarget {
    pub fn members(self) -> &'static [PopId] {
        match self {
            MicrostimTarget::MtL => &[PopId::MtL],
            MicrostimTarget::MtR => &[PopId::MtR],
            MicrostimTarget::MtAll => &[PopId::MtL, PopId::MtR],
            MicrostimTarget::V1All => &[PopId::V1G1, PopId::V1G2],
            MicrostimTarget::LipE => &[PopId::LipA, PopId::LipB],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MicrostimTarget::MtL => "mt_l",
            MicrostimTarget::MtR => "mt_r",
            MicrostimTarget::MtAll => "mt_all",
            MicrostimTarget::V1All => "v1_all",
            MicrostimTarget::LipE => "lip_e",
        }
    }
}

impl Microstimulation {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_pa >= 0.0) {
            return Err(Error::Config(format!(
                "microstimulation amplitude must be >= 0, got {}",
                self.amplitude_pa
            )));
        }
        Ok(())
    }
}

/// A structural or noise edit applied to a built network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PerturbationKind {
    /// Mute a random fraction of a stage's neurons: their spikes are never
    /// delivered and they drop out of rate readouts.
    DropNeurons { stage: StageGroup, fraction: f64 },
    /// Delete a random fraction of a projection's synapses.
    DropConnections {
        projection: ProjectionId,
        fraction: f64,
    },
    /// Add N(0, (multiplier * mean |w|)^2) to every weight of a
    /// projection; results may change sign.
    WeightNoise {
        projection: ProjectionId,
        multiplier: f64,
    },
    /// Add N(0, (multiplier * mean |I_in|)^2) to every target neuron's
    /// input current at every step; the reference current is measured from
    /// an unperturbed calibration trial.
    CurrentNoise { stage: StageGroup, multiplier: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    /// Stream seed for the random subset / noise draws.
    pub seed: u64,
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        let (label, magnitude, limit) = match self.kind {
            PerturbationKind::DropNeurons { fraction, .. } => ("drop fraction", fraction, 0.9),
            PerturbationKind::DropConnections { fraction, .. } => ("drop fraction", fraction, 0.9),
            PerturbationKind::WeightNoise { multiplier, .. } => ("noise multiplier", multiplier, 2.0),
            PerturbationKind::CurrentNoise { multiplier, .. } => {
                ("noise multiplier", multiplier, 2.0)
            }
        };
        if !(0.0..=limit).contains(&magnitude) {
            return Err(Error::Config(format!(
                "{label} {magnitude} outside [0, {limit}]"
            )));
        }
        Ok(())
    }
}
