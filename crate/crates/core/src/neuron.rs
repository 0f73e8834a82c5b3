//! Single-neuron dynamics: leaky integrate-and-fire membranes, conductance
//! synapse kinetics, and Ornstein-Uhlenbeck background current.
//!
//! This module owns the parameter types and the scalar reference
//! implementations. The population simulation in [`crate::network`] applies
//! the same update rules in a vectorized form; its integrator is checked
//! against the analytic firing-rate formula defined here.
//!
//! Membrane equation (forward Euler):
//!
//! `C_m dV/dt = -g_leak (V - V_rest) - sum_syn g s B(V) (V - E_syn) + I_ext + I_ou`
//!
//! where `B(V)` is the magnesium gate (NMDA only, 1 otherwise). A neuron
//! crossing threshold spikes, resets, and holds at the reset potential for
//! its refractory period.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Leaky integrate-and-fire membrane constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronParams {
    /// Resting potential, mV.
    pub v_rest: f64,
    /// Spike threshold, mV.
    pub v_threshold: f64,
    /// Post-spike reset potential, mV.
    pub v_reset: f64,
    /// Membrane capacitance, nF.
    pub c_m: f64,
    /// Leak conductance, nS.
    pub g_leak: f64,
    /// Absolute refractory period, ms.
    pub t_refractory: f64,
}

impl NeuronParams {
    /// Excitatory (pyramidal) defaults: 0.5 nF, 25 nS leak, 2 ms refractory.
    pub fn excitatory() -> Self {
        NeuronParams {
            v_rest: -70.0,
            v_threshold: -50.0,
            v_reset: -55.0,
            c_m: 0.5,
            g_leak: 25.0,
            t_refractory: 2.0,
        }
    }

    /// Inhibitory (interneuron) defaults: 0.2 nF, 20 nS leak, 1 ms refractory.
    pub fn inhibitory() -> Self {
        NeuronParams {
            v_rest: -70.0,
            v_threshold: -50.0,
            v_reset: -55.0,
            c_m: 0.2,
            g_leak: 20.0,
            t_refractory: 1.0,
        }
    }

    /// Membrane time constant, ms.
    pub fn tau_m(&self) -> f64 {
        self.c_m / self.g_leak * 1000.0
    }

    /// Minimum constant current that elicits firing, pA.
    pub fn rheobase(&self) -> f64 {
        self.g_leak * (self.v_threshold - self.v_rest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.v_reset >= self.v_threshold {
            return Err(Error::Config(format!(
                "v_reset {} must lie below v_threshold {}",
                self.v_reset, self.v_threshold
            )));
        }
        for (name, v) in [
            ("c_m", self.c_m),
            ("g_leak", self.g_leak),
            ("t_refractory", self.t_refractory),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Analytic steady firing rate of a LIF neuron under constant current, Hz.
/// Returns 0 below rheobase.
///
/// Interspike interval: `t_ref + tau_m ln((V_inf - V_reset)/(V_inf - V_thr))`
/// with `V_inf = V_rest + I / g_leak`.
pub fn analytic_lif_rate(params: &NeuronParams, current_pa: f64) -> f64 {
    let v_inf = params.v_rest + current_pa / params.g_leak;
    if v_inf <= params.v_threshold {
        return 0.0;
    }
    let isi_ms = params.t_refractory
        + params.tau_m() * ((v_inf - params.v_reset) / (v_inf - params.v_threshold)).ln();
    1000.0 / isi_ms
}

/// Ornstein-Uhlenbeck background current parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuNoiseParams {
    /// Correlation time, ms.
    pub tau: f64,
    /// Stationary mean, pA.
    pub mean: f64,
    /// Stationary variance, pA^2.
    pub sigma_sq: f64,
}

impl OuNoiseParams {
    /// Default background: tau 10 ms, mean 400 pA, variance 100 pA^2.
    pub fn standard() -> Self {
        OuNoiseParams {
            tau: 10.0,
            mean: 400.0,
            sigma_sq: 100.0,
        }
    }

    /// Elevated mean for the integrator stage's excitatory cells, 550 pA.
    pub fn elevated() -> Self {
        OuNoiseParams {
            mean: 550.0,
            ..OuNoiseParams::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!(
                "OU tau must be positive, got {}",
                self.tau
            )));
        }
        if self.sigma_sq < 0.0 {
            return Err(Error::Config(format!(
                "OU sigma_sq must be nonnegative, got {}",
                self.sigma_sq
            )));
        }
        Ok(())
    }

    /// Draws from the stationary distribution (used to initialize trials).
    pub fn stationary_sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let xi: f64 = rng.sample(StandardNormal);
        self.mean + self.sigma_sq.sqrt() * xi
    }
}

/// Exact-discretization OU update over one step of `dt_ms`.
///
/// `I' = mean + (I - mean) e^{-dt/tau} + sigma sqrt(1 - e^{-2 dt/tau}) xi`
///
/// Exactness means the update preserves the stationary mean and variance
/// for any dt, unlike an Euler step.
pub fn ou_step<R: Rng>(current: f64, params: &OuNoiseParams, dt_ms: f64, rng: &mut R) -> f64 {
    let decay = (-dt_ms / params.tau).exp();
    let xi: f64 = rng.sample(StandardNormal);
    params.mean
        + (current - params.mean) * decay
        + (params.sigma_sq * (1.0 - decay * decay)).sqrt() * xi
}

/// Magnesium block of the NMDA conductance as a function of membrane
/// potential: `1 / (1 + mg exp(-0.062 V) / 3.57)`, mg in mM, V in mV.
pub fn nmda_gate(v_mv: f64, mg_mm: f64) -> f64 {
    1.0 / (1.0 + mg_mm * (-0.062 * v_mv).exp() / 3.57)
}

/// Receptor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynapseKind {
    Ampa,
    Nmda,
    Gaba,
}

/// Kinetic constants for one receptor family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseKinetics {
    pub kind: SynapseKind,
    /// Reversal potential, mV.
    pub reversal: f64,
    /// Gating decay time constant, ms.
    pub decay_tau: f64,
    /// Rise time constant, ms (NMDA only; instantaneous rise otherwise).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rise_tau: Option<f64>,
    /// Saturation rate coupling rise to gating, 1/ms (NMDA only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Extracellular magnesium, mM (NMDA only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mg: Option<f64>,
}

/// The three receptor families with standard decision-circuit kinetics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticsSet {
    pub ampa: SynapseKinetics,
    pub nmda: SynapseKinetics,
    pub gaba: SynapseKinetics,
}

impl Default for KineticsSet {
    fn default() -> Self {
        KineticsSet {
            ampa: SynapseKinetics {
                kind: SynapseKind::Ampa,
                reversal: 0.0,
                decay_tau: 2.0,
                rise_tau: None,
                alpha: None,
                mg: None,
            },
            nmda: SynapseKinetics {
                kind: SynapseKind::Nmda,
                reversal: 0.0,
                decay_tau: 100.0,
                rise_tau: Some(2.0),
                alpha: Some(0.5),
                mg: Some(1.0),
            },
            gaba: SynapseKinetics {
                kind: SynapseKind::Gaba,
                reversal: -70.0,
                decay_tau: 5.0,
                rise_tau: None,
                alpha: None,
                mg: None,
            },
        }
    }
}

impl KineticsSet {
    pub fn validate(&self) -> Result<()> {
        for k in [&self.ampa, &self.nmda, &self.gaba] {
            if !(k.decay_tau > 0.0) {
                return Err(Error::Config(format!(
                    "{:?} decay_tau must be positive, got {}",
                    k.kind, k.decay_tau
                )));
            }
            if let Some(rise) = k.rise_tau {
                if !(rise > 0.0) {
                    return Err(Error::Config(format!(
                        "{:?} rise_tau must be positive, got {rise}",
                        k.kind
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Scalar reference LIF neuron driven by external current only (no
/// synapses). Used to pin integrator behavior; the vectorized population
/// engine must agree with it.
#[derive(Debug, Clone)]
pub struct ReferenceLif {
    pub params: NeuronParams,
    pub v: f64,
    pub refractory_remaining: f64,
}

impl ReferenceLif {
    pub fn new(params: NeuronParams) -> Self {
        ReferenceLif {
            v: params.v_rest,
            refractory_remaining: 0.0,
            params,
        }
    }

    /// Advances one Euler step under constant current `i_pa`. Returns true
    /// if the neuron spiked on this step.
    pub fn step(&mut self, i_pa: f64, dt_ms: f64) -> bool {
        let p = &self.params;
        if self.refractory_remaining > 0.0 {
            self.refractory_remaining -= dt_ms;
            self.v = p.v_reset;
            return false;
        }
        // Units: nS * mV = pA; pA * ms / nF = uV, so divide by 1000 for mV.
        let dv = (-p.g_leak * (self.v - p.v_rest) + i_pa) * dt_ms / p.c_m / 1000.0;
        self.v += dv;
        if self.v >= p.v_threshold {
            // The spike marks the end of this step; the full refractory
            // window starts here, so the next round(t_ref/dt) steps clamp.
            self.v = p.v_reset;
            self.refractory_remaining = p.t_refractory;
            true
        } else {
            false
        }
    }

    /// Mean firing rate over `duration_ms` under constant current, Hz.
    pub fn firing_rate(&mut self, i_pa: f64, dt_ms: f64, duration_ms: f64) -> f64 {
        let steps = (duration_ms / dt_ms).round() as usize;
        let mut spikes = 0usize;
        for _ in 0..steps {
            if self.step(i_pa, dt_ms) {
                spikes += 1;
            }
        }
        spikes as f64 / duration_ms * 1000.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;

    #[test]
    fn parameter_sets_match_contract() {
        let e = NeuronParams::excitatory();
        assert_eq!(
            (e.v_rest, e.v_threshold, e.v_reset),
            (-70.0, -50.0, -55.0)
        );
        assert_eq!((e.c_m, e.g_leak, e.t_refractory), (0.5, 25.0, 2.0));
        assert_eq!(e.tau_m(), 20.0);
        assert_eq!(e.rheobase(), 500.0);

        let i = NeuronParams::inhibitory();
        assert_eq!((i.c_m, i.g_leak, i.t_refractory), (0.2, 20.0, 1.0));
        assert_eq!(i.tau_m(), 10.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = NeuronParams::excitatory();
        p.v_reset = -40.0;
        assert!(p.validate().is_err());
        let mut p = NeuronParams::excitatory();
        p.c_m = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn resting_neuron_stays_at_rest() {
        let mut n = ReferenceLif::new(NeuronParams::excitatory());
        for _ in 0..1000 {
            assert!(!n.step(0.0, 0.5));
            assert_eq!(n.v, -70.0);
        }
    }

    #[test]
    fn subthreshold_current_never_fires() {
        let mut n = ReferenceLif::new(NeuronParams::excitatory());
        let rate = n.firing_rate(499.0, 0.1, 5000.0);
        assert_eq!(rate, 0.0);
        // Membrane sits just under threshold.
        assert!(n.v < -50.0 && n.v > -50.2);
    }

    #[test]
    fn suprathreshold_current_fires_periodically() {
        let mut n = ReferenceLif::new(NeuronParams::excitatory());
        assert!(n.firing_rate(520.0, 0.1, 2000.0) > 10.0);
    }

    #[test]
    fn fi_curve_matches_analytic_rate() {
        let params = NeuronParams::excitatory();
        for &i_pa in &[520.0, 600.0, 800.0] {
            let analytic = analytic_lif_rate(&params, i_pa);
            for &dt in &[0.1, 0.5] {
                let mut n = ReferenceLif::new(params);
                let simulated = n.firing_rate(i_pa, dt, 10_000.0);
                let rel = (simulated - analytic).abs() / analytic;
                assert!(
                    rel < 0.05,
                    "I={i_pa} pA dt={dt}: simulated {simulated} Hz vs analytic {analytic} Hz"
                );
            }
        }
    }

    #[test]
    fn refractory_period_is_respected() {
        let params = NeuronParams::excitatory();
        let dt = 0.1;
        let mut n = ReferenceLif::new(params);
        let mut last_spike_step: Option<i64> = None;
        for step in 0..200_000i64 {
            if n.step(2000.0, dt) {
                if let Some(prev) = last_spike_step {
                    let gap_ms = (step - prev) as f64 * dt;
                    assert!(
                        gap_ms >= params.t_refractory - 1e-9,
                        "interspike gap {gap_ms} ms under refractory {} ms",
                        params.t_refractory
                    );
                }
                last_spike_step = Some(step);
            }
        }
        assert!(last_spike_step.is_some());
    }

    #[test]
    fn leak_restores_rest_from_anywhere() {
        for start in [-90.0, -60.0, -51.0] {
            let mut n = ReferenceLif::new(NeuronParams::excitatory());
            n.v = start;
            for _ in 0..4000 {
                n.step(0.0, 0.5);
            }
            assert_relative_eq!(n.v, -70.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn ou_with_zero_variance_converges_to_mean() {
        let params = OuNoiseParams {
            tau: 10.0,
            mean: 400.0,
            sigma_sq: 0.0,
        };
        let mut rng = derive_rng(0, "test", &[]);
        let mut i = 0.0f64;
        let mut previous_gap = 400.0f64;
        for _ in 0..200 {
            i = ou_step(i, &params, 1.0, &mut rng);
            let gap = (i - 400.0).abs();
            assert!(gap < previous_gap);
            previous_gap = gap;
        }
        // Gap after 200 ms is 400 e^{-20} ~ 8e-7 pA.
        assert_relative_eq!(i, 400.0, epsilon = 1e-4);
        // One step moves the gap by exactly e^{-dt/tau}.
        let moved = ou_step(300.0, &params, 10.0, &mut rng);
        assert_relative_eq!(moved, 400.0 - 100.0 * (-1.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn ou_long_run_moments() {
        let params = OuNoiseParams::standard();
        let mut rng = derive_rng(7, "ou-moments", &[]);
        let dt = 0.5;
        let n = 1_000_000usize;
        let mut i = params.stationary_sample(&mut rng);
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for _ in 0..n {
            i = ou_step(i, &params, dt, &mut rng);
            sum += i;
            sum_sq += i * i;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // Autocorrelated samples: effective sample size ~ n dt / (2 tau),
        // SE of mean ~ sigma sqrt(2 tau / (n dt)) ~ 0.063 pA. Allow 3 SE.
        assert!((mean - 400.0).abs() < 0.2, "mean {mean}");
        assert!((var - 100.0).abs() < 2.0, "variance {var}");
    }

    #[test]
    fn ou_zero_dt_limit_is_continuous() {
        let params = OuNoiseParams::standard();
        // As dt -> 0 the decay factor -> 1 and the noise scale -> 0, so
        // the update approaches the identity regardless of xi.
        let mut rng = derive_rng(1, "ou-dt0", &[]);
        let i0 = 432.1;
        let i1 = ou_step(i0, &params, 1e-12, &mut rng);
        assert_relative_eq!(i1, i0, epsilon = 1e-5);
    }

    #[test]
    fn nmda_gate_reference_value() {
        // 1/(1 + e^{4.34}/3.57) at the resting potential.
        assert_relative_eq!(
            nmda_gate(-70.0, 1.0),
            0.044470720321356,
            max_relative = 1e-12
        );
    }

    #[test]
    fn nmda_gate_saturates_and_is_monotone() {
        assert_relative_eq!(nmda_gate(1e4, 1.0), 1.0, epsilon = 1e-12);
        let mut previous = 0.0;
        let mut v = -100.0;
        while v <= 60.0 {
            let g = nmda_gate(v, 1.0);
            assert!(g > previous && g > 0.0 && g <= 1.0);
            previous = g;
            v += 1.0;
        }
    }

    #[test]
    fn default_kinetics_match_contract() {
        let k = KineticsSet::default();
        assert_eq!(k.ampa.decay_tau, 2.0);
        assert_eq!(k.nmda.decay_tau, 100.0);
        assert_eq!(k.nmda.rise_tau, Some(2.0));
        assert_eq!(k.nmda.mg, Some(1.0));
        assert_eq!(k.gaba.decay_tau, 5.0);
        assert_eq!(k.ampa.reversal, 0.0);
        assert_eq!(k.gaba.reversal, -70.0);
        assert!(k.validate().is_ok());
    }
}
