//! The per-trial simulation loop.
//!
//! Vectorized forward-Euler integration of the whole network in f32
//! structure-of-arrays form. Synapses use postsynaptic conductance
//! accumulators: AMPA and GABA are event-driven (a presynaptic spike adds
//! its weight to every target's accumulator; accumulators decay
//! exponentially), NMDA keeps per-source rise/saturation state and updates
//! the per-target weighted sum incrementally, which preserves
//! `g_i = sum_j W_ij s_j` without a per-step dense matrix product over
//! inactive sources.
//!
//! A trial opens with a settling span in which the network runs on
//! intrinsic noise alone (no retinal drive, no stimulation): the decision
//! circuit reaches its spontaneous inhibition-stabilized balance instead
//! of carrying the synchronized-initialization transient into the
//! stimulus. Readout time zero is stimulus onset.
//!
//! Readout: LIP pool rates through a 50 ms causal boxcar, evaluated every
//! 10 ms with a fixed-window denominator (the window spans pre-stimulus
//! silence at the very start). The first pool to reach the rate threshold
//! decides; pool A encodes leftward, pool B rightward. If neither crosses
//! before the stimulus ends, the higher final rate decides and the trial
//! is flagged as undecided. An exact rate tie (possible when both pools
//! are silent) resolves to an unbiased guess drawn from the trial's seed.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgn::LgnDrive;
use crate::rng::derive_rng;
use crate::stimulus::Direction;

use super::build::Network;
use super::spec::{Microstimulation, PopId};

/// Integration and readout settings for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialParams {
    /// Integration step, ms. Must divide the readout bin evenly.
    pub dt_ms: f64,
    /// Simulated span, ms; clipped to the drive duration.
    pub t_max_ms: f64,
    /// Decision threshold on the windowed pool rate, Hz.
    pub threshold_hz: f64,
    /// Readout cadence and trace bin width, ms.
    pub readout_every_ms: f64,
    /// Causal boxcar window for the decision rate, ms.
    pub readout_window_ms: f64,
    /// Stop integrating once a decision fires (saves the post-decision
    /// tail; traces then cover only the simulated span).
    pub early_stop: bool,
    /// Pre-stimulus settling span, ms; must be a whole number of readout
    /// bins. Readout, traces and the decision clock all start at stimulus
    /// onset.
    pub settle_ms: f64,
}

impl Default for TrialParams {
    fn default() -> Self {
        TrialParams {
            dt_ms: 0.5,
            t_max_ms: 2000.0,
            threshold_hz: 30.0,
            readout_every_ms: 10.0,
            readout_window_ms: 50.0,
            early_stop: true,
            settle_ms: 300.0,
        }
    }
}

impl TrialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ms > 0.0 && self.dt_ms <= 2.0) {
            return Err(Error::Config(format!(
                "dt {} ms outside (0, 2]",
                self.dt_ms
            )));
        }
        if !(self.threshold_hz > 0.0) {
            return Err(Error::Config("threshold must be positive".into()));
        }
        let steps_per_bin = self.readout_every_ms / self.dt_ms;
        if (steps_per_bin.round() - steps_per_bin).abs() > 1e-9 || steps_per_bin < 1.0 {
            return Err(Error::Config(format!(
                "readout interval {} ms must be a whole number of {} ms steps",
                self.readout_every_ms, self.dt_ms
            )));
        }
        let bins_per_window = self.readout_window_ms / self.readout_every_ms;
        if (bins_per_window.round() - bins_per_window).abs() > 1e-9 || bins_per_window < 1.0 {
            return Err(Error::Config(format!(
                "readout window {} ms must be a whole number of {} ms bins",
                self.readout_window_ms, self.readout_every_ms
            )));
        }
        let settle_bins = self.settle_ms / self.readout_every_ms;
        if !self.settle_ms.is_finite()
            || settle_bins < 0.0
            || (settle_bins.round() - settle_bins).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "settle span {} ms must be a whole number of {} ms bins",
                self.settle_ms, self.readout_every_ms
            )));
        }
        Ok(())
    }
}

/// Spike counts of one population in 10 ms bins (unmuted neurons only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopTrace {
    pub pop: PopId,
    /// Neurons contributing to the counts (population minus muted).
    pub n_counted: usize,
    pub bin_ms: f64,
    pub counts: Vec<u32>,
}

impl PopTrace {
    /// Mean rate in bin `b`, Hz.
    pub fn rate(&self, b: usize) -> f64 {
        if self.n_counted == 0 {
            return 0.0;
        }
        self.counts[b] as f64 / self.n_counted as f64 / (self.bin_ms / 1000.0)
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub choice: Direction,
    /// Time of the decision readout, ms from stimulus onset.
    pub decision_time_ms: f64,
    /// True when a pool crossed the threshold; false marks the
    /// end-of-stimulus fallback.
    pub decided: bool,
    pub steps_run: usize,
    /// (t_ms, pool A rate, pool B rate) at each readout until the
    /// decision.
    pub readout: Vec<(f64, f64, f64)>,
    /// Per-population traces in `PopId::ALL` order.
    pub traces: Vec<PopTrace>,
}

/// Accumulated |input current| statistics from a measuring run.
#[derive(Debug, Clone, Default)]
pub(crate) struct CurrentTotals {
    pub abs_current_sum: [f64; 9],
    pub sample_count: [f64; 9],
}

/// Runs one trial. `seed` names the trial's private noise stream; two
/// runs with identical inputs and seed produce identical results.
pub fn run_trial(
    net: &Network,
    drive: &LgnDrive,
    microstim: Option<Microstimulation>,
    params: &TrialParams,
    seed: u64,
) -> Result<TrialResult> {
    engine(net, drive, microstim, params, seed, None)
}

/// Measuring variant used for perturbation calibration: runs the full
/// span without early stop and averages |input current| per population.
pub(crate) fn run_trial_measuring_current(
    net: &Network,
    drive: &LgnDrive,
    params: &TrialParams,
    seed: u64,
) -> Result<CurrentTotals> {
    let mut totals = CurrentTotals::default();
    let mut p = params.clone();
    p.early_stop = false;
    engine(net, drive, None, &p, seed, Some(&mut totals))?;
    Ok(totals)
}

/// Per-population integration constants, precomputed in f32.
struct PopConsts {
    start: usize,
    end: usize,
    v_rest: f32,
    v_thr: f32,
    v_reset: f32,
    k_leak: f32,
    k_cur: f32,
    n_ref_steps: u16,
    ou_decay: f32,
    ou_mean: f32,
    ou_scale: f32,
    stim_pa: f32,
    v_init_lo: f32,
    v_init_hi: f32,
}

fn engine(
    net: &Network,
    drive: &LgnDrive,
    microstim: Option<Microstimulation>,
    params: &TrialParams,
    seed: u64,
    mut measure: Option<&mut CurrentTotals>,
) -> Result<TrialResult> {
    params.validate()?;
    if let Some(ms) = &microstim {
        ms.validate()?;
    }
    let n_lgn_sim = net.pop(PopId::LgnOn).count;
    if drive.n_cells < net.lgn_drive_index.iter().map(|&i| i as usize).max().unwrap_or(0) + 1 {
        return Err(Error::Config(format!(
            "drive lattice ({} cells) smaller than the LGN wiring expects",
            drive.n_cells
        )));
    }

    let dt = params.dt_ms;
    let drive_steps = (drive.n_steps as f64 * drive.dt_ms / dt).round() as usize;
    let total_steps = drive_steps.min((params.t_max_ms / dt).round() as usize);
    let settle_steps = (params.settle_ms / dt).round() as usize;
    let steps_per_bin = (params.readout_every_ms / dt).round() as usize;
    let n_bins = total_steps.div_ceil(steps_per_bin);
    let bins_per_window = (params.readout_window_ms / params.readout_every_ms).round() as usize;

    let kin = &net.spec.kinetics;
    let d_ampa = (-dt / kin.ampa.decay_tau).exp() as f32;
    let d_gaba = (-dt / kin.gaba.decay_tau).exp() as f32;
    let d_nmda_x = (-dt / kin.nmda.rise_tau.unwrap_or(2.0)).exp() as f32;
    let k_nmda_s = (dt / kin.nmda.decay_tau) as f32;
    let k_nmda_rise = (dt * kin.nmda.alpha.unwrap_or(0.5)) as f32;
    let mg_over = (kin.nmda.mg.unwrap_or(1.0) / 3.57) as f32;
    let e_gaba = kin.gaba.reversal as f32;

    let consts: Vec<PopConsts> = net
        .pops
        .iter()
        .map(|pop| {
            let np = net.spec.neuron_params(pop.id);
            let ou = net.spec.noise_params(pop.id);
            let ou_decay = (-dt / ou.tau).exp();
            let stim = microstim
                .filter(|m| m.target.members().contains(&pop.id))
                .map_or(0.0, |m| m.amplitude_pa);
            PopConsts {
                start: pop.start,
                end: pop.start + pop.count,
                v_rest: np.v_rest as f32,
                v_thr: np.v_threshold as f32,
                v_reset: np.v_reset as f32,
                k_leak: (np.g_leak * dt / np.c_m / 1000.0) as f32,
                k_cur: (dt / np.c_m / 1000.0) as f32,
                n_ref_steps: (np.t_refractory / dt).round() as u16,
                ou_decay: ou_decay as f32,
                ou_mean: ou.mean as f32,
                ou_scale: (ou.sigma_sq * (1.0 - ou_decay * ou_decay)).sqrt() as f32,
                stim_pa: stim as f32,
                v_init_lo: np.v_rest as f32,
                v_init_hi: np.v_reset as f32,
            }
        })
        .collect();

    let n = net.n_neurons;
    let lip_base = net.pop(PopId::LipA).start;
    let n_lip_e = net.n_lip_e();
    let n_lip = n_lip_e + net.n_lip_i();
    let lip_row = n_lip;

    let mut rng = derive_rng(seed, "trial-dynamics", &[]);
    let mut pnoise_rng = derive_rng(seed, "trial-pnoise", &[]);
    let has_current_noise = net.current_noise_sigma.iter().any(|&s| s > 0.0);

    // State. Membrane potentials start uniformly between rest and reset to
    // desynchronize the first spikes; OU currents start stationary.
    let mut v = vec![0f32; n];
    let mut ou = vec![0f32; n];
    let mut refrac = vec![0u16; n];
    let mut g_ampa = vec![0f32; n];
    let mut g_gaba = vec![0f32; n];
    let mut g_nmda = vec![0f32; n_lip];
    let mut nmda_x = vec![0f32; n_lip_e];
    let mut nmda_s = vec![0f32; n_lip_e];
    for c in &consts {
        for i in c.start..c.end {
            v[i] = c.v_init_lo + (c.v_init_hi - c.v_init_lo) * rng.random::<f32>();
            ou[i] = c.ou_mean + (c.ou_scale / (1.0 - c.ou_decay * c.ou_decay).sqrt()) * {
                let xi: f32 = rng.sample(StandardNormal);
                xi
            };
        }
    }

    // Readout bookkeeping.
    let n_alive = |pop: PopId| -> usize {
        let layout = net.pop(pop);
        layout.range().filter(|&i| !net.muted[i]).count()
    };
    let alive_a = n_alive(PopId::LipA);
    let alive_b = n_alive(PopId::LipB);
    let mut traces: Vec<PopTrace> = net
        .pops
        .iter()
        .map(|pop| PopTrace {
            pop: pop.id,
            n_counted: pop.range().filter(|&i| !net.muted[i]).count(),
            bin_ms: params.readout_every_ms,
            counts: vec![0u32; n_bins],
        })
        .collect();

    let mut spikes: Vec<u32> = Vec::with_capacity(2048);
    let mut readout: Vec<(f64, f64, f64)> = Vec::with_capacity(n_bins);
    let mut decision: Option<(Direction, f64)> = None;
    let mut steps_run = 0usize;

    let window_s = params.readout_window_ms / 1000.0;
    let a_idx = PopId::ALL.iter().position(|&p| p == PopId::LipA).unwrap();
    let b_idx = PopId::ALL.iter().position(|&p| p == PopId::LipB).unwrap();
    let tie_guess = if crate::rng::derive_u64(seed, "trial-tiebreak", &[]) & 1 == 0 {
        Direction::Left
    } else {
        Direction::Right
    };
    let pick = |a: f64, b: f64| -> Direction {
        if a > b {
            Direction::Left
        } else if b > a {
            Direction::Right
        } else {
            tie_guess
        }
    };

    let zero_drive = vec![0f32; drive.n_cells];
    'time: for gstep in 0..settle_steps + total_steps {
        let on_stim = gstep >= settle_steps;
        let step = gstep.saturating_sub(settle_steps);
        let (d_on, d_off) = if on_stim {
            let frame = ((step as f64 * dt / drive.dt_ms) as usize).min(drive.n_steps - 1);
            (drive.on_at(frame), drive.off_at(frame))
        } else {
            (zero_drive.as_slice(), zero_drive.as_slice())
        };
        let bin = step / steps_per_bin;
        spikes.clear();

        for (p_idx, c) in consts.iter().enumerate() {
            let pop_id = net.pops[p_idx].id;
            let is_lgn_on = pop_id == PopId::LgnOn;
            let is_lgn_off = pop_id == PopId::LgnOff;
            let is_lip = c.start >= lip_base;
            let measuring = measure.is_some() && on_stim;
            let stim_pa = if on_stim { c.stim_pa } else { 0.0 };
            let mut abs_sum = 0.0f64;
            for i in c.start..c.end {
                let xi: f32 = rng.sample(StandardNormal);
                let ou_i = c.ou_mean + (ou[i] - c.ou_mean) * c.ou_decay + c.ou_scale * xi;
                ou[i] = ou_i;
                let mut cur = ou_i + stim_pa;
                if is_lgn_on {
                    cur += d_on[net.lgn_drive_index[i - c.start] as usize];
                } else if is_lgn_off {
                    cur += d_off[net.lgn_drive_index[i - c.start] as usize];
                }
                if has_current_noise {
                    let sigma = net.current_noise_sigma[i];
                    if sigma > 0.0 {
                        let e: f32 = pnoise_rng.sample(StandardNormal);
                        cur += sigma * e;
                    }
                }
                let vi = v[i];
                // E_ampa = E_nmda = 0 mV: the driving force is just -V.
                cur -= g_ampa[i] * vi;
                cur -= g_gaba[i] * (vi - e_gaba);
                if is_lip {
                    let gate = 1.0 / (1.0 + mg_over * (-0.062 * vi).exp());
                    cur -= g_nmda[i - lip_base] * gate * vi;
                }
                if measuring {
                    abs_sum += cur.abs() as f64;
                }
                if refrac[i] > 0 {
                    refrac[i] -= 1;
                    v[i] = c.v_reset;
                } else {
                    let vn = vi + c.k_leak * (c.v_rest - vi) + c.k_cur * cur;
                    if vn >= c.v_thr {
                        v[i] = c.v_reset;
                        refrac[i] = c.n_ref_steps;
                        if !net.muted[i] {
                            spikes.push(i as u32);
                            if on_stim {
                                traces[p_idx].counts[bin] += 1;
                            }
                        }
                    } else {
                        v[i] = vn;
                    }
                }
            }
            if measuring {
                if let Some(totals) = measure.as_deref_mut() {
                    totals.abs_current_sum[p_idx] += abs_sum;
                    totals.sample_count[p_idx] += (c.end - c.start) as f64;
                }
            }
        }

        // Conductance decay happens before delivery so that this step's
        // spikes arrive undecayed at the next step.
        for g in g_ampa.iter_mut() {
            *g *= d_ampa;
        }
        for g in g_gaba.iter_mut() {
            *g *= d_gaba;
        }

        // NMDA continuous update: decay the per-target aggregate, then add
        // the rise contribution of active sources; per-source s follows
        // the identical rule, keeping aggregate and sources consistent.
        for g in g_nmda.iter_mut() {
            *g *= 1.0 - k_nmda_s;
        }
        for j in 0..n_lip_e {
            nmda_x[j] *= d_nmda_x;
            if nmda_x[j] > 1e-6 {
                let coeff = k_nmda_rise * nmda_x[j] * (1.0 - nmda_s[j]);
                nmda_s[j] = nmda_s[j] * (1.0 - k_nmda_s) + coeff;
                let row = &net.w_lip_nmda[j * lip_row..(j + 1) * lip_row];
                for (g, &w) in g_nmda.iter_mut().zip(row) {
                    *g += coeff * w;
                }
            } else {
                nmda_s[j] *= 1.0 - k_nmda_s;
            }
        }

        // Spike delivery.
        for &sp in &spikes {
            let i = sp as usize;
            let pop_idx = net.pops.iter().rposition(|p| i >= p.start).unwrap();
            let local = i - net.pops[pop_idx].start;
            match net.pops[pop_idx].id {
                PopId::LgnOn => deliver(&net.lgn_v1, local, &mut g_ampa),
                PopId::LgnOff => deliver(&net.lgn_v1, n_lgn_sim + local, &mut g_ampa),
                PopId::V1G1 => deliver(&net.v1_mt, local, &mut g_ampa),
                PopId::V1G2 => {
                    deliver(&net.v1_mt, net.pop(PopId::V1G1).count + local, &mut g_ampa)
                }
                PopId::MtL => deliver(&net.mt_lip, local, &mut g_ampa),
                PopId::MtR => deliver(&net.mt_lip, net.pop(PopId::MtL).count + local, &mut g_ampa),
                PopId::LipA | PopId::LipB => {
                    let e_local = i - lip_base;
                    let row = &net.w_lip_ampa[e_local * lip_row..(e_local + 1) * lip_row];
                    for (g, &w) in g_ampa[lip_base..lip_base + n_lip].iter_mut().zip(row) {
                        *g += w;
                    }
                    nmda_x[e_local] += 1.0;
                }
                PopId::LipI => {
                    let i_local = i - net.pop(PopId::LipI).start;
                    let row = &net.w_gaba[i_local * n_lip_e..(i_local + 1) * n_lip_e];
                    for (g, &w) in g_gaba[lip_base..lip_base + n_lip_e].iter_mut().zip(row) {
                        *g += w;
                    }
                }
            }
        }

        if on_stim {
            steps_run = step + 1;
        }

        // Finite-state check at bin boundaries (cheap, frequent enough to
        // localize instabilities).
        if (gstep + 1) % steps_per_bin == 0 {
            if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::Divergence {
                    time_ms: (gstep + 1) as f64 * dt - params.settle_ms,
                    detail: format!("membrane potential of neuron {bad} is not finite"),
                });
            }
            if !on_stim {
                continue;
            }
            let t_ms = (step + 1) as f64 * dt;
            let lo = bin.saturating_sub(bins_per_window - 1);
            let sum_a: u32 = traces[a_idx].counts[lo..=bin].iter().sum();
            let sum_b: u32 = traces[b_idx].counts[lo..=bin].iter().sum();
            let rate_a = if alive_a == 0 {
                0.0
            } else {
                sum_a as f64 / alive_a as f64 / window_s
            };
            let rate_b = if alive_b == 0 {
                0.0
            } else {
                sum_b as f64 / alive_b as f64 / window_s
            };
            readout.push((t_ms, rate_a, rate_b));
            if decision.is_none() && (rate_a >= params.threshold_hz || rate_b >= params.threshold_hz)
            {
                decision = Some((pick(rate_a, rate_b), t_ms));
                if params.early_stop {
                    break 'time;
                }
            }
        }
    }

    let (choice, decision_time_ms, decided) = match decision {
        Some((c, t)) => (c, t, true),
        None => {
            let (_, a, b) = *readout.last().unwrap_or(&(total_steps as f64 * dt, 0.0, 0.0));
            (pick(a, b), total_steps as f64 * dt, false)
        }
    };

    // Trim trace bins to the simulated span.
    let bins_run = steps_run.div_ceil(steps_per_bin);
    for t in traces.iter_mut() {
        t.counts.truncate(bins_run);
    }

    Ok(TrialResult {
        choice,
        decision_time_ms,
        decided,
        steps_run,
        readout,
        traces,
    })
}

#[inline]
fn deliver(proj: &super::build::Projection, source: usize, g: &mut [f32]) {
    let lo = proj.offsets[source] as usize;
    let hi = proj.offsets[source + 1] as usize;
    for (t, w) in proj.targets[lo..hi].iter().zip(&proj.weights[lo..hi]) {
        g[*t as usize] += w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgn::LgnDrive;
    use crate::network::build::{build_network, tests::small_spec};

    /// Constant-drive tensor for the small test network.
    fn flat_drive(net: &Network, on_pa: f32, off_pa: f32, n_steps: usize) -> LgnDrive {
        let n_cells = net.spec.sizes.lgn_on;
        LgnDrive {
            n_steps,
            n_cells,
            dt_ms: 2.0,
            on: vec![on_pa; n_steps * n_cells],
            off: vec![off_pa; n_steps * n_cells],
        }
    }

    fn quick_params(t_max_ms: f64) -> TrialParams {
        TrialParams {
            t_max_ms,
            ..Default::default()
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 120.0, 0.0, 200);
        let a = run_trial(&net, &drive, None, &quick_params(400.0), 42).unwrap();
        let b = run_trial(&net, &drive, None, &quick_params(400.0), 42).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&net, &drive, None, &quick_params(400.0), 43).unwrap();
        assert_ne!(a.traces, c.traces);
    }

    #[test]
    fn invalid_params_rejected() {
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 0.0, 0.0, 100);
        let mut p = quick_params(100.0);
        p.dt_ms = 3.0;
        assert!(run_trial(&net, &drive, None, &p, 1).is_err());
        let mut p = quick_params(100.0);
        p.readout_every_ms = 7.3;
        assert!(run_trial(&net, &drive, None, &p, 1).is_err());
    }

    #[test]
    fn traces_cover_all_populations() {
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 100.0, 100.0, 150);
        let r = run_trial(&net, &drive, None, &quick_params(300.0), 7).unwrap();
        assert_eq!(r.traces.len(), 9);
        for (t, id) in r.traces.iter().zip(PopId::ALL) {
            assert_eq!(t.pop, id);
            assert!(t.n_counted > 0);
        }
        // Strong flat ON drive makes LGN_ON fire.
        let on_total: u32 = r.traces[0].counts.iter().sum();
        assert!(on_total > 0, "ON population should respond to drive");
    }

    #[test]
    fn readout_cadence_and_span() {
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 0.0, 0.0, 200);
        let mut p = quick_params(400.0);
        p.early_stop = false;
        let r = run_trial(&net, &drive, None, &p, 3).unwrap();
        assert_eq!(r.steps_run, 800);
        assert_eq!(r.readout.len(), 40);
        assert!((r.readout[0].0 - 10.0).abs() < 1e-9);
        assert!((r.readout.last().unwrap().0 - 400.0).abs() < 1e-9);
    }

    #[test]
    fn microstim_targets_correct_population() {
        // Strong MT_L stimulation makes MT_L fire far above MT_R.
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 0.0, 0.0, 300);
        let stim = Microstimulation {
            target: crate::network::spec::MicrostimTarget::MtL,
            amplitude_pa: 400.0,
        };
        let mut p = quick_params(600.0);
        p.early_stop = false;
        let r = run_trial(&net, &drive, Some(stim), &p, 11).unwrap();
        let mt_l: u32 = r.traces[4].counts.iter().sum();
        let mt_r: u32 = r.traces[5].counts.iter().sum();
        assert!(
            mt_l > 10 * (mt_r + 1),
            "MT_L {mt_l} spikes vs MT_R {mt_r}"
        );
    }

    #[test]
    fn muted_neurons_emit_no_counted_spikes() {
        let spec = small_spec();
        let net = build_network(&spec).unwrap();
        let mut muted_net = net.clone();
        for i in muted_net.pop(PopId::LgnOn).range() {
            muted_net.muted[i] = true;
        }
        let drive = flat_drive(&net, 150.0, 0.0, 150);
        let r = run_trial(&muted_net, &drive, None, &quick_params(300.0), 5).unwrap();
        assert_eq!(r.traces[0].n_counted, 0);
        assert_eq!(r.traces[0].counts.iter().sum::<u32>(), 0);
    }

    #[test]
    fn current_measurement_reports_plausible_scale() {
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 0.0, 0.0, 100);
        let totals = run_trial_measuring_current(&net, &drive, &quick_params(200.0), 1).unwrap();
        // Without drive or spikes, |input| is dominated by the OU mean.
        for p_idx in 0..9 {
            let mean = totals.abs_current_sum[p_idx] / totals.sample_count[p_idx];
            assert!(
                (mean - 400.0).abs() < 250.0,
                "population {p_idx} mean |I| = {mean}"
            );
        }
    }

    #[test]
    fn zero_drive_trial_falls_back_at_stimulus_end() {
        // With LIP inhibition calibrated, spontaneous activity stays below
        // the decision threshold and the trial reports the fallback path.
        let net = build_network(&small_spec()).unwrap();
        let drive = flat_drive(&net, 0.0, 0.0, 400);
        let r = run_trial(&net, &drive, None, &quick_params(800.0), 21).unwrap();
        assert!(!r.decided, "spontaneous activity crossed threshold");
        assert_eq!(r.decision_time_ms, 800.0);
    }
}
