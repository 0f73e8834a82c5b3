//! Experiment orchestration: sweeps of trials over a stimulus dataset.
//!
//! Four families share one runner: baseline evaluation (single grid
//! point), microstimulation amplitude sweeps, connectivity fine-tuning
//! sweeps (rebuild the network per grid point), and robustness
//! perturbation sweeps (degrade a built network per grid point).
//!
//! Variance control: trial noise streams are keyed by (reinit, coherence,
//! direction, stimulus repeat, trial repeat) and deliberately not by the
//! grid coordinate, and network build streams are keyed by reinit only.
//! Grid points therefore differ exactly by the swept quantity and share
//! all other randomness, so sweep contrasts are paired. Removing grid
//! points or coherence levels from a plan leaves the remaining results
//! unchanged.
//!
//! A trial failure (numerical divergence) aborts its grid point, which is
//! reported with the error message; remaining grid points still run.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{self, BehavioralSummary, TrialRecord, TrendStat};
use crate::error::{Error, Result};
use crate::lgn::compute_lgn_drive;
use crate::network::{
    apply_perturbation, build_network, measure_input_current, InputCurrentReference,
    Microstimulation, MicrostimTarget, Network, NetworkSpec, Perturbation, PerturbationKind,
    ProjectionId, StageGroup, TrialParams,
};
use crate::rng::derive_u64;
use crate::stimulus::{load_manifest, DatasetEntry, DatasetManifest, Direction};

/// Connectivity parameter swept by a fine-tuning plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineTuneAxis {
    /// Multiplier on the mean feedforward conductance from the motion
    /// energy stage to the integration stage.
    V1MtWeight,
    /// Connection probability from the integration stage to the decision
    /// pools, absolute.
    MtLipFraction,
    /// Mean conductance of those connections, nS, absolute.
    MtLipConductance,
    /// Recurrent within-pool weight multiplier, absolute.
    LipHebbStrong,
}

impl FineTuneAxis {
    /// Documented sweep range (inclusive).
    pub fn range(self) -> (f64, f64) {
        match self {
            FineTuneAxis::V1MtWeight => (0.2, 3.0),
            FineTuneAxis::MtLipFraction => (0.1, 1.0),
            FineTuneAxis::MtLipConductance => (0.01, 0.15),
            FineTuneAxis::LipHebbStrong => (0.7, 1.5),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FineTuneAxis::V1MtWeight => "v1_mt_weight_multiplier",
            FineTuneAxis::MtLipFraction => "mt_lip_fraction",
            FineTuneAxis::MtLipConductance => "mt_lip_conductance_ns",
            FineTuneAxis::LipHebbStrong => "lip_hebb_strong",
        }
    }
}

/// Structural degradation swept by a perturbation plan; the grid value is
/// the drop fraction or noise multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PerturbAxis {
    DropNeurons { stage: StageGroup },
    DropConnections { projection: ProjectionId },
    WeightNoise { projection: ProjectionId },
    CurrentNoise { stage: StageGroup },
}

impl PerturbAxis {
    pub fn label(self) -> &'static str {
        match self {
            PerturbAxis::DropNeurons { .. } => "drop_neuron_fraction",
            PerturbAxis::DropConnections { .. } => "drop_connection_fraction",
            PerturbAxis::WeightNoise { .. } => "weight_noise_multiplier",
            PerturbAxis::CurrentNoise { .. } => "current_noise_multiplier",
        }
    }

    fn at(self, level: f64) -> PerturbationKind {
        match self {
            PerturbAxis::DropNeurons { stage } => PerturbationKind::DropNeurons {
                stage,
                fraction: level,
            },
            PerturbAxis::DropConnections { projection } => PerturbationKind::DropConnections {
                projection,
                fraction: level,
            },
            PerturbAxis::WeightNoise { projection } => PerturbationKind::WeightNoise {
                projection,
                multiplier: level,
            },
            PerturbAxis::CurrentNoise { stage } => PerturbationKind::CurrentNoise {
                stage,
                multiplier: level,
            },
        }
    }

    fn needs_current_reference(self) -> bool {
        matches!(self, PerturbAxis::CurrentNoise { .. })
    }
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExperimentKind {
    Baseline,
    Microstim { target: MicrostimTarget },
    FineTune { axis: FineTuneAxis },
    Perturb { axis: PerturbAxis },
}

impl ExperimentKind {
    /// Name of the grid axis in exports.
    pub fn axis_label(&self) -> &'static str {
        match self {
            ExperimentKind::Baseline => "baseline",
            ExperimentKind::Microstim { .. } => "microstim_amplitude_pa",
            ExperimentKind::FineTune { axis } => axis.label(),
            ExperimentKind::Perturb { axis } => axis.label(),
        }
    }
}

/// Full description of a sweep; with a dataset directory this determines
/// every output bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    /// Grid of swept values; `[0.0]` for baseline.
    pub grid: Vec<f64>,
    /// Unsigned coherence levels to evaluate (must exist in the dataset).
    pub coherences: Vec<f64>,
    /// Distinct stimulus movies per (coherence, direction).
    pub stimulus_repeats: u32,
    /// Trials per stimulus movie per reinitialization.
    pub trial_repeats: u32,
    /// Independent network reinitializations.
    pub n_reinit: u32,
    pub master_seed: u64,
    /// Base network description; its `seed` field is overridden per
    /// reinitialization.
    pub spec: NetworkSpec,
    pub trial: TrialParams,
    /// Scale factor from retinal kernel response to drive current.
    pub drive_gain: f64,
    /// Keep per-trial decision-pool readout series in the results (memory
    /// heavy; off by default).
    #[serde(default)]
    pub keep_readouts: bool,
}

/// Desk-scale coherence battery used by default plans.
pub fn default_battery() -> Vec<f64> {
    vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8]
}

impl ExperimentPlan {
    /// Desk-scale defaults shared by all kinds; callers override the grid
    /// and selection as needed.
    pub fn new(kind: ExperimentKind, master_seed: u64) -> Self {
        ExperimentPlan {
            kind,
            grid: vec![0.0],
            coherences: default_battery(),
            stimulus_repeats: 10,
            trial_repeats: 2,
            n_reinit: 5,
            master_seed,
            spec: NetworkSpec::default(),
            trial: TrialParams::default(),
            drive_gain: crate::lgn::DEFAULT_DRIVE_GAIN,
            keep_readouts: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.grid.is_empty() {
            return fail("sweep grid must be nonempty".into());
        }
        if self.coherences.is_empty() {
            return fail("coherence selection must be nonempty".into());
        }
        for &c in &self.coherences {
            if !(0.0..=0.99).contains(&c) {
                return fail(format!("coherence {c} outside [0, 0.99]"));
            }
        }
        if self.stimulus_repeats == 0 || self.trial_repeats == 0 || self.n_reinit == 0 {
            return fail("repeat and reinit counts must be >= 1".into());
        }
        if !(self.drive_gain.is_finite() && self.drive_gain > 0.0) {
            return fail(format!("drive gain {} must be positive", self.drive_gain));
        }
        match &self.kind {
            ExperimentKind::Baseline => {
                if self.grid.len() != 1 {
                    return fail("baseline takes a single grid point".into());
                }
            }
            ExperimentKind::Microstim { .. } => {
                for &a in &self.grid {
                    if !(0.0..=40.0).contains(&a) {
                        return fail(format!("microstimulation amplitude {a} outside [0, 40] pA"));
                    }
                }
            }
            ExperimentKind::FineTune { axis } => {
                let (lo, hi) = axis.range();
                for &v in &self.grid {
                    if !(lo..=hi).contains(&v) {
                        return fail(format!(
                            "{} value {v} outside [{lo}, {hi}]",
                            axis.label()
                        ));
                    }
                }
            }
            ExperimentKind::Perturb { axis } => {
                for &v in &self.grid {
                    Perturbation {
                        kind: axis.at(v),
                        seed: 0,
                    }
                    .validate()?;
                }
            }
        }
        self.spec.validate()?;
        self.trial.validate()?;
        Ok(())
    }

    /// Network description at one grid level (identical to the base for
    /// non-finetune kinds).
    fn spec_at(&self, level: f64) -> NetworkSpec {
        let mut spec = self.spec.clone();
        if let ExperimentKind::FineTune { axis } = self.kind {
            match axis {
                FineTuneAxis::V1MtWeight => spec.projections.g_v1_mt *= level,
                FineTuneAxis::MtLipFraction => spec.projections.mt_lip_fraction = level,
                FineTuneAxis::MtLipConductance => spec.projections.g_mt_lip = level,
                FineTuneAxis::LipHebbStrong => spec.projections.hebb_strong = level,
            }
        }
        spec
    }

    fn microstim_at(&self, level: f64) -> Option<Microstimulation> {
        match self.kind {
            ExperimentKind::Microstim { target } => Some(Microstimulation {
                target,
                amplitude_pa: level,
            }),
            _ => None,
        }
    }

    fn build_seed(&self, reinit: u32) -> u64 {
        derive_u64(self.master_seed, "reinit-build", &[reinit as u64])
    }

    fn perturb_seed(&self, reinit: u32) -> u64 {
        derive_u64(self.master_seed, "perturb-draw", &[reinit as u64])
    }

    fn trial_seed(&self, reinit: u32, entry: &DatasetEntry, trial_repeat: u32) -> u64 {
        let coh_key = (entry.coherence * 1e4).round() as u64;
        let dir = match entry.direction {
            Direction::Left => 0u64,
            Direction::Right => 1,
        };
        derive_u64(
            self.master_seed,
            "trial",
            &[
                reinit as u64,
                coh_key,
                dir,
                entry.repeat as u64,
                trial_repeat as u64,
            ],
        )
    }
}

/// One recorded trial with its position in the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedTrial {
    pub stimulus_repeat: u32,
    pub trial_repeat: u32,
    #[serde(flatten)]
    pub record: TrialRecord,
}

/// Results of one reinitialization at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReinitResult {
    pub reinit: u32,
    pub build_seed: u64,
    pub perturb_seed: Option<u64>,
    pub summary: BehavioralSummary,
    /// Raw trials; exported as CSV, not to the aggregate JSON.
    #[serde(skip_serializing)]
    pub records: Vec<RecordedTrial>,
}

/// All reinitializations at one grid point, or the error that aborted it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub level: f64,
    pub reinits: Vec<ReinitResult>,
    pub failure: Option<String>,
}

/// Per-level mean and standard error across reinitializations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPointStats {
    pub level: f64,
    pub k_mean: f64,
    pub k_sem: f64,
    pub b_mean: f64,
    pub b_sem: f64,
    pub accuracy_mean: Option<f64>,
    pub accuracy_sem: Option<f64>,
    pub decision_time_mean: f64,
    pub decision_time_sem: f64,
}

/// Output of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub plan: ExperimentPlan,
    pub axis_label: String,
    pub points: Vec<GridPoint>,
    pub stats: Vec<GridPointStats>,
    /// Pooled OLS trends of per-reinit metrics against the grid level;
    /// absent for single-point grids.
    pub k_trend: Option<TrendStat>,
    pub b_trend: Option<TrendStat>,
    pub accuracy_trend: Option<TrendStat>,
    pub decision_time_trend: Option<TrendStat>,
}

/// Entries of the dataset matching the plan's selection, in (coherence,
/// direction, repeat) order.
fn select_entries<'m>(
    plan: &ExperimentPlan,
    manifest: &'m DatasetManifest,
) -> Result<Vec<&'m DatasetEntry>> {
    let key = |c: f64| (c * 1e4).round() as i64;
    let mut selected = Vec::new();
    let mut coherences = plan.coherences.clone();
    coherences.sort_by(|a, b| a.total_cmp(b));
    for &c in &coherences {
        for dir in [Direction::Left, Direction::Right] {
            for rep in 0..plan.stimulus_repeats {
                let found = manifest.entries.iter().find(|e| {
                    key(e.coherence) == key(c) && e.direction == dir && e.repeat == rep
                });
                match found {
                    Some(e) => selected.push(e),
                    None => {
                        return Err(Error::StimulusFormat(format!(
                            "dataset lacks coherence {c} {dir} repeat {rep}; \
                             regenerate it with enough repeats"
                        )))
                    }
                }
            }
        }
    }
    Ok(selected)
}

/// Runs a sweep against a dataset directory.
pub fn run_experiment(plan: &ExperimentPlan, dataset_root: &Path) -> Result<SweepResult> {
    plan.validate()?;
    let manifest = load_manifest(dataset_root)?;
    let entries = select_entries(plan, &manifest)?;
    let n_levels = plan.grid.len();

    // level -> reinit -> per-entry record lists (or the first error).
    let mut level_records: Vec<Vec<Result<Vec<RecordedTrial>>>> = (0..n_levels)
        .map(|_| (0..plan.n_reinit).map(|_| Ok(Vec::new())).collect())
        .collect();
    let mut perturb_seeds: Vec<Option<u64>> = vec![None; plan.n_reinit as usize];

    for reinit in 0..plan.n_reinit {
        let build_seed = plan.build_seed(reinit);

        // Networks per level. Non-finetune kinds share one build.
        let mut nets: Vec<Arc<Network>> = Vec::with_capacity(n_levels);
        match &plan.kind {
            ExperimentKind::FineTune { .. } => {
                for &level in &plan.grid {
                    let mut spec = plan.spec_at(level);
                    spec.seed = build_seed;
                    nets.push(Arc::new(build_network(&spec)?));
                }
            }
            ExperimentKind::Perturb { axis } => {
                let mut spec = plan.spec.clone();
                spec.seed = build_seed;
                let baseline = build_network(&spec)?;
                let reference = if axis.needs_current_reference() {
                    Some(current_reference(
                        plan,
                        &baseline,
                        &manifest,
                        dataset_root,
                        reinit,
                    )?)
                } else {
                    None
                };
                let seed = plan.perturb_seed(reinit);
                perturb_seeds[reinit as usize] = Some(seed);
                for &level in &plan.grid {
                    let p = Perturbation {
                        kind: axis.at(level),
                        seed,
                    };
                    nets.push(Arc::new(apply_perturbation(
                        &baseline,
                        &p,
                        reference.as_ref(),
                    )?));
                }
            }
            _ => {
                let mut spec = plan.spec.clone();
                spec.seed = build_seed;
                let net = Arc::new(build_network(&spec)?);
                nets.extend(std::iter::repeat_n(net, n_levels));
            }
        }

        // Each entry computes its retinal drive once and reuses it across
        // grid levels and trial repeats.
        let per_entry: Vec<Vec<Result<Vec<RecordedTrial>>>> = entries
            .par_iter()
            .map(|entry| {
                let prepared = manifest
                    .load_entry(dataset_root, entry)
                    .and_then(|stim| compute_lgn_drive(&stim, plan.drive_gain));
                let drive = match prepared {
                    Ok(d) => d,
                    Err(e) => {
                        let msg = e.to_string();
                        return (0..n_levels)
                            .map(|_| Err(Error::StimulusFormat(msg.clone())))
                            .collect();
                    }
                };
                plan.grid
                    .iter()
                    .enumerate()
                    .map(|(li, &level)| {
                        let stim = plan.microstim_at(level);
                        let mut out = Vec::with_capacity(plan.trial_repeats as usize);
                        for t_rep in 0..plan.trial_repeats {
                            let seed = plan.trial_seed(reinit, entry, t_rep);
                            let res =
                                crate::network::run_trial(&nets[li], &drive, stim, &plan.trial, seed)?;
                            out.push(RecordedTrial {
                                stimulus_repeat: entry.repeat,
                                trial_repeat: t_rep,
                                record: TrialRecord {
                                    coherence: entry.coherence,
                                    true_direction: entry.direction,
                                    choice: res.choice,
                                    decision_time_ms: res.decision_time_ms,
                                    decided: res.decided,
                                    seed,
                                    readout: plan.keep_readouts.then_some(res.readout),
                                },
                            });
                        }
                        Ok(out)
                    })
                    .collect()
            })
            .collect();

        // Regroup entry-major results into per-level lists.
        for entry_result in per_entry {
            for (li, level_part) in entry_result.into_iter().enumerate() {
                let slot = &mut level_records[li][reinit as usize];
                match (slot.as_mut(), level_part) {
                    (Ok(acc), Ok(mut part)) => acc.append(&mut part),
                    (Ok(_), Err(e)) => *slot = Err(e),
                    (Err(_), _) => {}
                }
            }
        }
    }

    // Summarize per grid point; a failed (level, reinit) aborts the level.
    let mut points = Vec::with_capacity(n_levels);
    for (li, &level) in plan.grid.iter().enumerate() {
        let mut reinits = Vec::new();
        let mut failure = None;
        for (reinit, slot) in level_records[li].drain(..).enumerate() {
            match slot.and_then(|records| {
                let trials: Vec<_> = records.iter().map(|r| r.record.clone()).collect();
                behavior::summarize(&trials).map(|summary| (records, summary))
            }) {
                Ok((records, summary)) => reinits.push(ReinitResult {
                    reinit: reinit as u32,
                    build_seed: plan.build_seed(reinit as u32),
                    perturb_seed: perturb_seeds[reinit],
                    summary,
                    records,
                }),
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                }
            }
        }
        if failure.is_some() {
            reinits.clear();
        }
        points.push(GridPoint {
            level,
            reinits,
            failure,
        });
    }

    let stats = grid_stats(&points);
    let pooled = |f: &dyn Fn(&ReinitResult) -> Option<f64>| -> Option<TrendStat> {
        let mut levels = Vec::new();
        let mut values = Vec::new();
        for p in &points {
            for r in &p.reinits {
                if let Some(v) = f(r) {
                    levels.push(p.level);
                    values.push(v);
                }
            }
        }
        behavior::regress_metric_vs_level(&levels, &values).ok()
    };

    let k_trend = pooled(&|r| Some(r.summary.fit.k));
    let b_trend = pooled(&|r| Some(r.summary.fit.b));
    let accuracy_trend = pooled(&|r| r.summary.accuracy);
    let decision_time_trend = pooled(&|r| Some(mean_decision_time(r)));
    Ok(SweepResult {
        axis_label: plan.kind.axis_label().to_string(),
        points,
        stats,
        k_trend,
        b_trend,
        accuracy_trend,
        decision_time_trend,
        plan: plan.clone(),
    })
}

/// Mean decision time across all trials of one reinit, ms.
fn mean_decision_time(r: &ReinitResult) -> f64 {
    let n = r.records.len().max(1);
    r.records
        .iter()
        .map(|t| t.record.decision_time_ms)
        .sum::<f64>()
        / n as f64
}

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn grid_stats(points: &[GridPoint]) -> Vec<GridPointStats> {
    points
        .iter()
        .filter(|p| !p.reinits.is_empty())
        .map(|p| {
            let ks: Vec<f64> = p.reinits.iter().map(|r| r.summary.fit.k).collect();
            let bs: Vec<f64> = p.reinits.iter().map(|r| r.summary.fit.b).collect();
            let accs: Vec<f64> = p.reinits.iter().filter_map(|r| r.summary.accuracy).collect();
            let dts: Vec<f64> = p.reinits.iter().map(mean_decision_time).collect();
            let (k_mean, k_sem) = mean_sem(&ks);
            let (b_mean, b_sem) = mean_sem(&bs);
            let (dt_mean, dt_sem) = mean_sem(&dts);
            let (acc_mean, acc_sem) = if accs.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_sem(&accs);
                (Some(m), Some(s))
            };
            GridPointStats {
                level: p.level,
                k_mean,
                k_sem,
                b_mean,
                b_sem,
                accuracy_mean: acc_mean,
                accuracy_sem: acc_sem,
                decision_time_mean: dt_mean,
                decision_time_sem: dt_sem,
            }
        })
        .collect()
}

/// Mean |input current| per stage of the unperturbed network, measured on
/// a mid-coherence reference stimulus. Used to scale injected current
/// noise.
fn current_reference(
    plan: &ExperimentPlan,
    baseline: &Network,
    manifest: &DatasetManifest,
    dataset_root: &Path,
    reinit: u32,
) -> Result<InputCurrentReference> {
    let target = 0.5;
    let entry = manifest
        .entries
        .iter()
        .filter(|e| {
            plan.coherences
                .iter()
                .any(|&c| (e.coherence - c).abs() < 1e-9)
        })
        .min_by(|a, b| {
            let da = (a.coherence - target).abs();
            let db = (b.coherence - target).abs();
            da.total_cmp(&db)
                .then(a.direction.sign().total_cmp(&b.direction.sign()))
                .then(a.repeat.cmp(&b.repeat))
        })
        .ok_or_else(|| Error::StimulusFormat("dataset has no entries for the plan".into()))?;
    let stim = manifest.load_entry(dataset_root, entry)?;
    let drive = compute_lgn_drive(&stim, plan.drive_gain)?;
    let seed = derive_u64(plan.master_seed, "current-ref", &[reinit as u64]);
    measure_input_current(baseline, &drive, &plan.trial, seed)
}

/// Wrappers that check the plan kind matches the entry point.
pub fn run_baseline(plan: &ExperimentPlan, dataset_root: &Path) -> Result<SweepResult> {
    expect_kind(plan, matches!(plan.kind, ExperimentKind::Baseline), "baseline")?;
    run_experiment(plan, dataset_root)
}

pub fn run_microstim(plan: &ExperimentPlan, dataset_root: &Path) -> Result<SweepResult> {
    expect_kind(
        plan,
        matches!(plan.kind, ExperimentKind::Microstim { .. }),
        "microstimulation",
    )?;
    run_experiment(plan, dataset_root)
}

pub fn run_finetune(plan: &ExperimentPlan, dataset_root: &Path) -> Result<SweepResult> {
    expect_kind(
        plan,
        matches!(plan.kind, ExperimentKind::FineTune { .. }),
        "fine-tuning",
    )?;
    run_experiment(plan, dataset_root)
}

pub fn run_perturb(plan: &ExperimentPlan, dataset_root: &Path) -> Result<SweepResult> {
    expect_kind(
        plan,
        matches!(plan.kind, ExperimentKind::Perturb { .. }),
        "perturbation",
    )?;
    run_experiment(plan, dataset_root)
}

fn expect_kind(plan: &ExperimentPlan, ok: bool, label: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "plan kind {:?} does not match the {label} entry point",
            plan.kind
        )))
    }
}

/// A file written by `export_results`, with its content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
}

/// Serializes the sweep into its artifact files as (name, bytes), in the
/// order `export_results` writes them. The bytes depend only on the
/// result, so replaying a run reproduces the files exactly.
pub fn render_results(result: &SweepResult) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();

    let mut json = serde_json::to_vec_pretty(result)?;
    json.push(b'\n');
    files.push(("sweep.json".into(), json));

    let mut points = String::from(
        "level,reinit,k,b,residual,accuracy,mean_decision_time_ms,n_trials,n_no_decision\n",
    );
    for p in &result.points {
        for r in &p.reinits {
            let acc = r
                .summary
                .accuracy
                .map_or(String::new(), |a| format!("{a}"));
            points.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.level,
                r.reinit,
                r.summary.fit.k,
                r.summary.fit.b,
                r.summary.fit.residual,
                acc,
                mean_decision_time(r),
                r.summary.n_trials,
                r.summary.n_no_decision
            ));
        }
    }
    files.push(("points.csv".into(), points.into_bytes()));

    let mut curves = String::from(
        "level,reinit,signed_coherence,n,n_right,p_right,mean_decision_time_ms,n_no_decision\n",
    );
    for p in &result.points {
        for r in &p.reinits {
            for c in &r.summary.points {
                curves.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    p.level,
                    r.reinit,
                    c.signed_coherence,
                    c.n,
                    c.n_right,
                    c.p_right,
                    c.mean_decision_time_ms,
                    c.n_no_decision
                ));
            }
        }
    }
    files.push(("curves.csv".into(), curves.into_bytes()));

    let mut trials = String::from(
        "level,reinit,coherence,direction,stimulus_repeat,trial_repeat,seed,choice,correct,decided,decision_time_ms\n",
    );
    for p in &result.points {
        for r in &p.reinits {
            for t in &r.records {
                trials.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    p.level,
                    r.reinit,
                    t.record.coherence,
                    t.record.true_direction,
                    t.stimulus_repeat,
                    t.trial_repeat,
                    t.record.seed,
                    t.record.choice,
                    t.record.correct(),
                    t.record.decided,
                    t.record.decision_time_ms
                ));
            }
        }
    }
    files.push(("trials.csv".into(), trials.into_bytes()));

    Ok(files)
}

/// Writes the sweep to `root` as:
/// - `sweep.json`: plan, per-point summaries, aggregate stats, trends;
/// - `points.csv`: one row per (level, reinit) with fit and accuracy;
/// - `curves.csv`: one row per (level, reinit, signed coherence);
/// - `trials.csv`: one row per trial.
pub fn export_results(result: &SweepResult, root: &Path) -> Result<Vec<Artifact>> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut artifacts = Vec::new();
    for (name, bytes) in render_results(result)? {
        let path = root.join(&name);
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        artifacts.push(Artifact {
            name,
            sha256: hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes)),
        });
    }
    Ok(artifacts)
}
