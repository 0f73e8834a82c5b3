//! Layered run configuration, validation, and run manifests.
//!
//! One TOML file configures an entire run: master seed, network constants,
//! stimulus geometry, trial integration, and the sweep plan. Missing keys
//! take the library defaults and unknown keys are rejected. Command-line
//! values layer on top of the file (file < flags), and the fully resolved
//! "effective" configuration is recorded in a [`RunManifest`] next to the
//! results, from which [`replay_run`] reproduces and verifies the output
//! byte for byte.
//!
//! Resolution order for a run:
//! 1. parse the file (or start from defaults),
//! 2. apply [`Overrides`] and the command's plan kind ([`ConfigSchema::effective`]),
//! 3. range-check everything at once ([`ConfigSchema::validate_all`]),
//! 4. turn the plan section into an [`ExperimentPlan`] ([`ConfigSchema::build_plan`]).

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{
    default_battery, render_results, run_experiment, Artifact, ExperimentKind, ExperimentPlan,
    FineTuneAxis, PerturbAxis,
};
use crate::lgn::DEFAULT_DRIVE_GAIN;
use crate::network::{
    MicrostimTarget, NetworkSpec, ProjectionId, StageGroup, TrialParams, TrialResult,
};
use crate::stimulus::{RdkParams, MANIFEST_NAME};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FORMAT_VERSION: &str = "1";
pub const RUN_MANIFEST_NAME: &str = "run_manifest.json";
/// Environment variable holding the default worker-thread count.
pub const WORKERS_ENV: &str = "NDM_WORKERS";

/// Sweep family, as named by the `run` subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Baseline,
    Microstim,
    Finetune,
    Perturb,
}

impl PlanKind {
    pub fn name(self) -> &'static str {
        match self {
            PlanKind::Baseline => "baseline",
            PlanKind::Microstim => "microstim",
            PlanKind::Finetune => "finetune",
            PlanKind::Perturb => "perturb",
        }
    }
}

/// Degradation family of a perturbation plan; pairs with `stage` or
/// `projection` to pick the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    DropNeurons,
    DropConnections,
    WeightNoise,
    CurrentNoise,
}

impl PerturbMode {
    pub fn name(self) -> &'static str {
        match self {
            PerturbMode::DropNeurons => "drop_neurons",
            PerturbMode::DropConnections => "drop_connections",
            PerturbMode::WeightNoise => "weight_noise",
            PerturbMode::CurrentNoise => "current_noise",
        }
    }

    fn takes_stage(self) -> bool {
        matches!(self, PerturbMode::DropNeurons | PerturbMode::CurrentNoise)
    }
}

/// The `[plan]` table: what to sweep and how much data to collect. All
/// selector fields are flat so every key is a scalar and typos anywhere in
/// the table are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConfig {
    /// Sweep family; omitted means "whatever the command says" (plain
    /// `validate` falls back to baseline).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<PlanKind>,
    /// Stimulated subset (microstim plans only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<MicrostimTarget>,
    /// Swept connectivity parameter (finetune plans only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<FineTuneAxis>,
    /// Degradation mode (perturb plans only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<PerturbMode>,
    /// Degraded stage for drop_neurons / current_noise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<StageGroup>,
    /// Degraded projection for drop_connections / weight_noise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionId>,
    /// Swept grid values; empty takes the kind's documented default grid.
    pub grid: Vec<f64>,
    /// Unsigned coherences; empty takes the desk-scale battery.
    pub coherences: Vec<f64>,
    /// Distinct stimulus movies per (coherence, direction).
    pub stimulus_repeats: u32,
    /// Trials per stimulus movie per reinitialization.
    pub trial_repeats: u32,
    /// Independent network reinitializations.
    pub n_reinit: u32,
    /// Keep per-trial decision-pool readout series in memory and in
    /// sweep.json (large).
    pub keep_readouts: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            kind: None,
            target: None,
            axis: None,
            mode: None,
            stage: None,
            projection: None,
            grid: Vec::new(),
            coherences: Vec::new(),
            stimulus_repeats: 10,
            trial_repeats: 2,
            n_reinit: 5,
            keep_readouts: false,
        }
    }
}

/// Complete run configuration. Field order keeps scalars ahead of
/// sub-tables so the struct serializes cleanly to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigSchema {
    /// Root seed; every random stream in the run derives from it.
    pub master_seed: u64,
    /// Worker threads; omitted means the environment variable, then all
    /// cores. Never affects results, only wall time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Scale from retinal kernel response to drive current: the peak
    /// discrete temporal tap maps to this many pA.
    pub drive_gain: f64,
    pub network: NetworkSpec,
    /// Stimulus geometry used when generating movies or datasets. The
    /// simulation itself accepts only the canonical 300 px / 120 frame
    /// geometry and rejects others when it loads them.
    pub stimulus: RdkParams,
    pub trial: TrialParams,
    pub plan: PlanConfig,
}

impl Default for ConfigSchema {
    fn default() -> Self {
        ConfigSchema {
            master_seed: 1,
            workers: None,
            drive_gain: DEFAULT_DRIVE_GAIN,
            network: NetworkSpec::default(),
            stimulus: RdkParams::default(),
            trial: TrialParams::default(),
            plan: PlanConfig::default(),
        }
    }
}

/// Command-line values layered over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
}

impl ConfigSchema {
    pub fn from_toml(text: &str) -> Result<ConfigSchema> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ConfigSchema> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ConfigSchema::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config cannot serialize: {e}")))
    }

    /// Applies overrides and resolves every defaulted plan field. The
    /// result is the configuration a run actually uses; it is what the
    /// manifest records and what replay re-executes.
    ///
    /// A plan kind both in the file and on the command line must agree.
    pub fn effective(&self, command_kind: Option<PlanKind>, over: &Overrides) -> Result<ConfigSchema> {
        let mut cfg = self.clone();
        if let Some(seed) = over.master_seed {
            cfg.master_seed = seed;
        }
        if let Some(w) = over.workers {
            cfg.workers = Some(w);
        }
        let kind = match (cfg.plan.kind, command_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config plan.kind {} does not match the {} command",
                    a.name(),
                    b.name()
                )));
            }
            (a, b) => a.or(b).unwrap_or(PlanKind::Baseline),
        };
        cfg.plan.kind = Some(kind);
        if cfg.plan.coherences.is_empty() {
            cfg.plan.coherences = default_battery();
        }
        if cfg.plan.grid.is_empty() {
            // An unresolvable kind (say, finetune without an axis) leaves
            // the grid empty; validate_all then reports both problems.
            if let Ok(ek) = cfg.experiment_kind() {
                cfg.plan.grid = default_grid(&ek);
            }
        }
        Ok(cfg)
    }

    /// Assembles the plan selectors into an [`ExperimentKind`], rejecting
    /// missing or contradictory fields.
    pub fn experiment_kind(&self) -> Result<ExperimentKind> {
        let p = &self.plan;
        let kind = p.kind.ok_or_else(|| {
            Error::Config("plan.kind is unset; pass a run subcommand or set it in the file".into())
        })?;
        let forbid = |set: bool, field: &str, owner: &str| -> Result<()> {
            if set {
                Err(Error::Config(format!(
                    "plan.{field} applies only to {owner} plans, not {}",
                    kind.name()
                )))
            } else {
                Ok(())
            }
        };
        let target = || forbid(p.target.is_some(), "target", "microstim");
        let axis = || forbid(p.axis.is_some(), "axis", "finetune");
        let mode = || forbid(p.mode.is_some(), "mode", "perturb");
        let stage = || forbid(p.stage.is_some(), "stage", "perturb");
        let projection = || forbid(p.projection.is_some(), "projection", "perturb");
        match kind {
            PlanKind::Baseline => {
                target()?;
                axis()?;
                mode()?;
                stage()?;
                projection()?;
                Ok(ExperimentKind::Baseline)
            }
            PlanKind::Microstim => {
                axis()?;
                mode()?;
                stage()?;
                projection()?;
                let target = p.target.ok_or_else(|| {
                    Error::Config(
                        "microstim plans require plan.target \
                         (mt_l, mt_r, mt_all, v1_all, lip_e)"
                            .into(),
                    )
                })?;
                Ok(ExperimentKind::Microstim { target })
            }
            PlanKind::Finetune => {
                target()?;
                mode()?;
                stage()?;
                projection()?;
                let axis = p.axis.ok_or_else(|| {
                    Error::Config(
                        "finetune plans require plan.axis (v1_mt_weight, \
                         mt_lip_fraction, mt_lip_conductance, lip_hebb_strong)"
                            .into(),
                    )
                })?;
                Ok(ExperimentKind::FineTune { axis })
            }
            PlanKind::Perturb => {
                target()?;
                axis()?;
                let mode = p.mode.ok_or_else(|| {
                    Error::Config(
                        "perturb plans require plan.mode (drop_neurons, \
                         drop_connections, weight_noise, current_noise)"
                            .into(),
                    )
                })?;
                let axis = if mode.takes_stage() {
                    if p.projection.is_some() {
                        return Err(Error::Config(format!(
                            "plan.mode {} targets a stage, not a projection",
                            mode.name()
                        )));
                    }
                    let stage = p.stage.ok_or_else(|| {
                        Error::Config(format!(
                            "plan.mode {} requires plan.stage (lgn, v1, mt, lip)",
                            mode.name()
                        ))
                    })?;
                    match mode {
                        PerturbMode::DropNeurons => PerturbAxis::DropNeurons { stage },
                        _ => PerturbAxis::CurrentNoise { stage },
                    }
                } else {
                    if p.stage.is_some() {
                        return Err(Error::Config(format!(
                            "plan.mode {} targets a projection, not a stage",
                            mode.name()
                        )));
                    }
                    let projection = p.projection.ok_or_else(|| {
                        Error::Config(format!(
                            "plan.mode {} requires plan.projection (lgn_v1, v1_mt, mt_lip)",
                            mode.name()
                        ))
                    })?;
                    match mode {
                        PerturbMode::DropConnections => PerturbAxis::DropConnections { projection },
                        _ => PerturbAxis::WeightNoise { projection },
                    }
                };
                Ok(ExperimentKind::Perturb { axis })
            }
        }
    }

    /// Range-checks the whole configuration and reports every problem at
    /// once, one bullet per violation.
    pub fn validate_all(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        let mut note = |r: Result<()>| {
            if let Err(e) = r {
                let s = e.to_string();
                if !problems.contains(&s) {
                    problems.push(s);
                }
            }
        };
        note(self.network.validate());
        note(self.stimulus.validate());
        note(self.trial.validate());
        if !(self.drive_gain.is_finite() && self.drive_gain > 0.0) {
            note(Err(Error::Config(format!(
                "drive gain {} must be positive",
                self.drive_gain
            ))));
        }
        // TOML integers are signed 64-bit; a seed beyond that range could
        // not survive a config round trip.
        for (name, seed) in [("master_seed", self.master_seed), ("network.seed", self.network.seed)]
        {
            if seed > i64::MAX as u64 {
                note(Err(Error::Config(format!(
                    "{name} {seed} exceeds the TOML integer range"
                ))));
            }
        }
        if self.workers == Some(0) {
            note(Err(Error::Config("workers must be >= 1".into())));
        }
        match self.experiment_kind() {
            Err(e) => note(Err(e)),
            // plan.validate re-checks the network and trial sections;
            // duplicate messages are dropped above.
            Ok(_) => note(self.build_plan_unchecked().validate()),
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} problem(s):\n  - {}",
                problems.len(),
                problems.join("\n  - ")
            )))
        }
    }

    /// The executable sweep plan for this configuration.
    pub fn build_plan(&self) -> Result<ExperimentPlan> {
        self.experiment_kind()?;
        let plan = self.build_plan_unchecked();
        plan.validate()?;
        Ok(plan)
    }

    /// Plan assembly without validation; callers must have resolved the
    /// experiment kind already.
    fn build_plan_unchecked(&self) -> ExperimentPlan {
        let kind = self
            .experiment_kind()
            .expect("caller resolved the experiment kind");
        let mut plan = ExperimentPlan::new(kind, self.master_seed);
        plan.grid = if self.plan.grid.is_empty() {
            default_grid(&kind)
        } else {
            self.plan.grid.clone()
        };
        if !self.plan.coherences.is_empty() {
            plan.coherences = self.plan.coherences.clone();
        }
        plan.stimulus_repeats = self.plan.stimulus_repeats;
        plan.trial_repeats = self.plan.trial_repeats;
        plan.n_reinit = self.plan.n_reinit;
        plan.keep_readouts = self.plan.keep_readouts;
        plan.spec = self.network.clone();
        plan.trial = self.trial.clone();
        plan.drive_gain = self.drive_gain;
        plan
    }

    /// The configuration as TOML with each value annotated as `default`
    /// (equal to the library default) or `set` (came from the file, a
    /// flag, or the command).
    ///
    /// The baseline for the comparison shares this config's plan
    /// selectors, so a grid or coherence battery filled in from the
    /// resolved kind still reads `default`; the selectors themselves
    /// always read `set`.
    pub fn annotated_toml(&self) -> Result<String> {
        let text = self.to_toml()?;
        let own = toml::Table::try_from(self)
            .map_err(|e| Error::Config(format!("config cannot serialize: {e}")))?;
        let base_cfg = {
            let mut b = ConfigSchema::default();
            b.plan.kind = self.plan.kind;
            b.plan.target = self.plan.target;
            b.plan.axis = self.plan.axis;
            b.plan.mode = self.plan.mode;
            b.plan.stage = self.plan.stage;
            b.plan.projection = self.plan.projection;
            b.effective(None, &Overrides::default()).unwrap_or(b)
        };
        let base = toml::Table::try_from(base_cfg)
            .map_err(|e| Error::Config(format!("config cannot serialize: {e}")))?;
        const SELECTORS: [&str; 6] = ["kind", "target", "axis", "mode", "stage", "projection"];

        let width = text
            .lines()
            .filter(|l| l.contains(" = "))
            .map(str::len)
            .max()
            .unwrap_or(0)
            .max(28);
        let mut out = String::new();
        let mut section: Vec<String> = Vec::new();
        for line in text.lines() {
            let trimmed = line.trim();
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                section = trimmed
                    .trim_matches(|c| c == '[' || c == ']')
                    .split('.')
                    .map(str::to_string)
                    .collect();
                out.push_str(line);
            } else if let Some((key, _)) = trimmed.split_once(" = ") {
                let mut path: Vec<&str> = section.iter().map(String::as_str).collect();
                path.push(key);
                let selector = section == ["plan"] && SELECTORS.contains(&key);
                let tag = match (lookup(&own, &path), lookup(&base, &path)) {
                    _ if selector => "set",
                    (Some(a), Some(b)) if a == b => "default",
                    _ => "set",
                };
                out.push_str(&format!("{line:<width$}  # {tag}"));
            } else {
                out.push_str(line);
            }
            out.push('\n');
        }
        Ok(out)
    }
}

fn lookup<'a>(table: &'a toml::Table, path: &[&str]) -> Option<&'a toml::Value> {
    let (first, rest) = path.split_first()?;
    let mut value = table.get(*first)?;
    for key in rest {
        value = value.as_table()?.get(*key)?;
    }
    Some(value)
}

/// Documented default grid per sweep family.
pub fn default_grid(kind: &ExperimentKind) -> Vec<f64> {
    match kind {
        ExperimentKind::Baseline => vec![0.0],
        ExperimentKind::Microstim { .. } => vec![0.0, 20.0, 40.0],
        ExperimentKind::FineTune { axis } => match axis {
            FineTuneAxis::V1MtWeight => vec![0.5, 1.0, 2.0, 3.0],
            FineTuneAxis::MtLipFraction => vec![0.25, 0.5, 0.75, 1.0],
            FineTuneAxis::MtLipConductance => vec![0.05, 0.1, 0.15],
            FineTuneAxis::LipHebbStrong => vec![0.9, 1.1, 1.3, 1.5],
        },
        ExperimentKind::Perturb { axis } => match axis {
            PerturbAxis::DropNeurons { .. } | PerturbAxis::DropConnections { .. } => {
                vec![0.0, 0.3, 0.6, 0.9]
            }
            PerturbAxis::WeightNoise { .. } | PerturbAxis::CurrentNoise { .. } => {
                vec![0.0, 1.0, 2.0]
            }
        },
    }
}

/// Loads, layers, resolves, and range-checks a run configuration; `None`
/// starts from the library defaults. Returns the effective configuration.
pub fn validate_config(
    path: Option<&Path>,
    command_kind: Option<PlanKind>,
    over: &Overrides,
) -> Result<ConfigSchema> {
    let cfg = match path {
        Some(p) => ConfigSchema::load(p)?,
        None => ConfigSchema::default(),
    };
    let eff = cfg.effective(command_kind, over)?;
    eff.validate_all()?;
    Ok(eff)
}

/// Worker threads this process should use: the explicit value if any,
/// else the environment variable, else 0 meaning "let the pool decide".
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        if n == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        return Ok(n);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{WORKERS_ENV}={s:?} is not a worker count")))?;
            if n == 0 {
                Err(Error::Config(format!("{WORKERS_ENV} must be >= 1")))
            } else {
                Ok(n)
            }
        }
        Err(_) => Ok(0),
    }
}

/// Where a run's stimuli came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    /// Dataset directory as given on the command line.
    pub path: String,
    /// SHA-256 of the dataset's manifest file.
    pub manifest_sha256: String,
}

/// Everything needed to reproduce and verify one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: String,
    pub tool_version: String,
    /// Subcommand that produced the run, e.g. `run baseline`.
    pub command: String,
    pub master_seed: u64,
    /// Effective configuration: defaults resolved, overrides applied.
    pub config: ConfigSchema,
    /// Content hash of the network description in `config`.
    pub spec_hash: String,
    pub dataset: DatasetRef,
    /// Result files and their content hashes.
    pub artifacts: Vec<Artifact>,
    /// Wall-clock write time, ms since the Unix epoch. Informational;
    /// replay ignores it.
    pub created_unix_ms: u64,
}

impl RunManifest {
    /// Builds the manifest for a finished run. `config` must be the
    /// effective configuration the run actually used.
    pub fn new(
        command: &str,
        config: ConfigSchema,
        dataset_root: &Path,
        artifacts: Vec<Artifact>,
    ) -> Result<RunManifest> {
        Ok(RunManifest {
            format_version: MANIFEST_FORMAT_VERSION.into(),
            tool_version: TOOL_VERSION.into(),
            command: command.to_string(),
            master_seed: config.master_seed,
            spec_hash: config.network.content_hash(),
            dataset: DatasetRef {
                path: dataset_root.display().to_string(),
                manifest_sha256: dataset_manifest_sha256(dataset_root)?,
            },
            config,
            artifacts,
            created_unix_ms: now_unix_ms(),
        })
    }

    /// Writes the manifest into a run directory; returns the file path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RUN_MANIFEST_NAME);
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads a manifest from a run directory or a direct file path.
    pub fn load(path: &Path) -> Result<RunManifest> {
        let file = if path.is_dir() {
            path.join(RUN_MANIFEST_NAME)
        } else {
            path.to_path_buf()
        };
        let bytes = std::fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let manifest: RunManifest = serde_json::from_slice(&bytes)?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "manifest format version {} is not supported (expected {})",
                manifest.format_version, MANIFEST_FORMAT_VERSION
            )));
        }
        Ok(manifest)
    }
}

/// SHA-256 of a dataset's manifest file, hex.
pub fn dataset_manifest_sha256(root: &Path) -> Result<String> {
    let path = root.join(MANIFEST_NAME);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Re-runs the sweep a manifest describes and verifies that the
/// regenerated artifacts hash identically to the recorded ones.
///
/// `dataset_override` substitutes the dataset location (its contents must
/// still hash to the recorded value); `out` optionally writes the
/// regenerated files. Worker count is taken from the current environment,
/// not the manifest, because it never affects results.
pub fn replay_run(
    manifest_path: &Path,
    dataset_override: Option<&Path>,
    out: Option<&Path>,
) -> Result<RunManifest> {
    let manifest = RunManifest::load(manifest_path)?;
    let dataset_root = dataset_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&manifest.dataset.path));

    let dataset_hash = dataset_manifest_sha256(&dataset_root)?;
    if dataset_hash != manifest.dataset.manifest_sha256 {
        return Err(Error::ReplayMismatch(format!(
            "dataset manifest hash {} differs from the recorded {}",
            dataset_hash, manifest.dataset.manifest_sha256
        )));
    }
    let spec_hash = manifest.config.network.content_hash();
    if spec_hash != manifest.spec_hash {
        return Err(Error::ReplayMismatch(format!(
            "network description hashes to {} but the manifest recorded {}",
            spec_hash, manifest.spec_hash
        )));
    }

    let plan = manifest.config.build_plan()?;
    let result = run_experiment(&plan, &dataset_root)?;
    let rendered = render_results(&result)?;

    let mut mismatches: Vec<String> = Vec::new();
    let recorded: std::collections::BTreeMap<&str, &str> = manifest
        .artifacts
        .iter()
        .map(|a| (a.name.as_str(), a.sha256.as_str()))
        .collect();
    for (name, bytes) in &rendered {
        let sha = hex::encode(Sha256::digest(bytes));
        match recorded.get(name.as_str()) {
            Some(&want) if want == sha => {}
            Some(_) => mismatches.push(format!("{name}: content differs")),
            None => mismatches.push(format!("{name}: not in the manifest")),
        }
    }
    for name in recorded.keys() {
        if !rendered.iter().any(|(n, _)| n == name) {
            mismatches.push(format!("{name}: recorded but not regenerated"));
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::ReplayMismatch(mismatches.join("; ")));
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in &rendered {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(manifest)
}

/// Writes the per-population rate traces of one trial as `trace.csv`
/// (population, bin start in ms, mean rate in Hz) under `out_dir` and
/// returns the file path. Fails if the trial carries no traces.
pub fn record_trace(result: &TrialResult, out_dir: &Path) -> Result<PathBuf> {
    if result.traces.is_empty() {
        return Err(Error::Analysis(
            "the trial carries no population traces".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut csv = String::from("population,t_ms,rate_hz\n");
    for trace in &result.traces {
        for b in 0..trace.counts.len() {
            csv.push_str(&format!(
                "{},{},{}\n",
                trace.pop.name(),
                b as f64 * trace.bin_ms,
                trace.rate(b)
            ));
        }
    }
    let path = out_dir.join("trace.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
