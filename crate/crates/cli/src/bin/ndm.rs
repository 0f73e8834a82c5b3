//! Model runner: validate configurations, execute sweeps, replay recorded
//! runs, and trace single trials.
//!
//! Exit codes: 0 success, 2 rejected input, 3 numerical divergence,
//! 1 other failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ndm_core::config::{
    record_trace, replay_run, resolve_workers, validate_config, Overrides, PlanKind,
};
use ndm_core::experiments::{
    export_results, run_baseline, run_finetune, run_microstim, run_perturb, SweepResult,
};
use ndm_core::config::RunManifest;
use ndm_core::lgn::compute_lgn_drive;
use ndm_core::network::{build_network, run_trial, Microstimulation, MicrostimTarget};
use ndm_core::rng::derive_u64;
use ndm_core::stimulus::{generate_stimulus, Direction};
use ndm_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ndm", version, about = "Motion-discrimination network model runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration file and print the effective configuration.
    Validate {
        /// Configuration file; the defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Execute a sweep and write results plus a run manifest.
    Run {
        #[command(subcommand)]
        kind: RunCommand,
    },
    /// Re-execute a recorded run and verify byte-identical results.
    Replay {
        /// Run directory or manifest file.
        #[arg(long)]
        manifest: PathBuf,
        /// Dataset directory override (contents must match the recording).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Optionally write the regenerated artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one trial and write its population rate traces.
    Trace(TraceArgs),
}

#[derive(Subcommand)]
enum RunCommand {
    /// Evaluate the unmodified network.
    Baseline(RunArgs),
    /// Sweep injected current over a stimulation target.
    Microstim(RunArgs),
    /// Sweep one connectivity parameter, rebuilding the network per level.
    Finetune(RunArgs),
    /// Sweep a structural degradation of the built network.
    Perturb(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; the defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stimulus dataset directory (see `rdk build-dataset`).
    #[arg(long)]
    dataset: PathBuf,
    /// Output directory for result files and the run manifest.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: NDM_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    /// Configuration file; the defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for trace.csv and readout.csv.
    #[arg(long)]
    out: PathBuf,
    /// Stimulus coherence.
    #[arg(long, default_value_t = 0.8)]
    coherence: f64,
    /// Stimulus direction: left or right.
    #[arg(long, default_value = "right")]
    direction: String,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Stimulated subset: mt_l, mt_r, mt_all, v1_all, or lip_e.
    #[arg(long)]
    target: Option<String>,
    /// Injected current for the stimulated subset, pA.
    #[arg(long, default_value_t = 0.0)]
    amplitude: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { config } => validate(config.as_deref()),
        Command::Run { kind } => {
            let (kind, args) = match kind {
                RunCommand::Baseline(a) => (PlanKind::Baseline, a),
                RunCommand::Microstim(a) => (PlanKind::Microstim, a),
                RunCommand::Finetune(a) => (PlanKind::Finetune, a),
                RunCommand::Perturb(a) => (PlanKind::Perturb, a),
            };
            run_sweep(kind, args)
        }
        Command::Replay {
            manifest,
            dataset,
            out,
        } => replay(&manifest, dataset.as_deref(), out.as_deref()),
        Command::Trace(args) => trace(args),
    }
}

fn init_pool(workers: Option<usize>) -> Result<()> {
    let n = resolve_workers(workers)?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn validate(config: Option<&Path>) -> Result<()> {
    let eff = validate_config(config, None, &Overrides::default())?;
    print!("{}", eff.annotated_toml()?);
    Ok(())
}

fn run_sweep(kind: PlanKind, args: RunArgs) -> Result<()> {
    let over = Overrides {
        master_seed: args.seed,
        workers: args.workers,
    };
    let eff = validate_config(args.config.as_deref(), Some(kind), &over)?;
    init_pool(eff.workers)?;
    let plan = eff.build_plan()?;
    let runner = match kind {
        PlanKind::Baseline => run_baseline,
        PlanKind::Microstim => run_microstim,
        PlanKind::Finetune => run_finetune,
        PlanKind::Perturb => run_perturb,
    };
    let result = runner(&plan, &args.dataset)?;
    let artifacts = export_results(&result, &args.out)?;
    let manifest = RunManifest::new(
        &format!("run {}", kind.name()),
        eff,
        &args.dataset,
        artifacts,
    )?;
    let manifest_path = manifest.write(&args.out)?;

    report_sweep(&result);
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

fn report_sweep(result: &SweepResult) {
    let mut failed = 0usize;
    for point in &result.points {
        if let Some(reason) = &point.failure {
            eprintln!(
                "warning: {} {} failed: {}",
                result.axis_label, point.level, reason
            );
            failed += 1;
        }
    }
    for s in &result.stats {
        let acc = match (s.accuracy_mean, s.accuracy_sem) {
            (Some(m), Some(sem)) => format!("{m:.3} +- {sem:.3}"),
            _ => "n/a".to_string(),
        };
        println!(
            "{} {:>7}: k {:6.2} +- {:5.2}  b {:6.2}  accuracy {}  decision {:6.0} +- {:3.0} ms",
            result.axis_label, s.level, s.k_mean, s.k_sem, s.b_mean, acc, s.decision_time_mean,
            s.decision_time_sem
        );
    }
    if let Some(t) = &result.accuracy_trend {
        println!(
            "accuracy trend: slope {:+.4} per unit level (p = {:.4})",
            t.slope, t.p_value
        );
    }
    if failed > 0 {
        eprintln!("warning: {failed} grid point(s) failed");
    }
}

fn replay(manifest: &Path, dataset: Option<&Path>, out: Option<&Path>) -> Result<()> {
    init_pool(None)?;
    let replayed = replay_run(manifest, dataset, out)?;
    println!(
        "replay ok: {} artifact(s) of `{}` match (master seed {})",
        replayed.artifacts.len(),
        replayed.command,
        replayed.master_seed
    );
    Ok(())
}

fn parse_target(s: &str) -> Result<MicrostimTarget> {
    Ok(match s {
        "mt_l" => MicrostimTarget::MtL,
        "mt_r" => MicrostimTarget::MtR,
        "mt_all" => MicrostimTarget::MtAll,
        "v1_all" => MicrostimTarget::V1All,
        "lip_e" => MicrostimTarget::LipE,
        other => {
            return Err(Error::Config(format!(
                "unknown target '{other}' (expected mt_l, mt_r, mt_all, v1_all, or lip_e)"
            )))
        }
    })
}

fn trace(args: TraceArgs) -> Result<()> {
    let over = Overrides {
        master_seed: args.seed,
        workers: None,
    };
    let eff = validate_config(args.config.as_deref(), None, &over)?;

    let mut stimulus_params = eff.stimulus.clone();
    stimulus_params.coherence = args.coherence;
    stimulus_params.direction = args.direction.parse::<Direction>()?;
    stimulus_params.seed = derive_u64(eff.master_seed, "trace-stimulus", &[]);
    let stimulus = generate_stimulus(&stimulus_params)?;
    let drive = compute_lgn_drive(&stimulus, eff.drive_gain)?;

    let mut spec = eff.network.clone();
    spec.seed = derive_u64(eff.master_seed, "trace-build", &[]);
    let net = build_network(&spec)?;

    let microstim = match (&args.target, args.amplitude) {
        (Some(t), amplitude_pa) => Some(Microstimulation {
            target: parse_target(t)?,
            amplitude_pa,
        }),
        (None, a) if a != 0.0 => {
            return Err(Error::Config(
                "--amplitude needs --target to pick the stimulated subset".into(),
            ))
        }
        (None, _) => None,
    };

    // Trace the whole stimulus window rather than stopping at the
    // decision; the decision time is still reported below.
    let mut trial = eff.trial.clone();
    trial.early_stop = false;
    let seed = derive_u64(eff.master_seed, "trace-trial", &[]);
    let result = run_trial(&net, &drive, microstim, &trial, seed)?;

    let trace_path = record_trace(&result, &args.out)?;
    let mut readout = String::from("t_ms,pool_a_hz,pool_b_hz\n");
    for (t, a, b) in &result.readout {
        readout.push_str(&format!("{t},{a},{b}\n"));
    }
    let readout_path = args.out.join("readout.csv");
    std::fs::write(&readout_path, readout).map_err(|e| Error::io(&readout_path, e))?;

    println!(
        "coherence {} {}: choice {}, {} at {} ms",
        args.coherence,
        stimulus_params.direction,
        result.choice,
        if result.decided {
            "threshold crossed"
        } else {
            "no decision, fell back"
        },
        result.decision_time_ms
    );
    let span_ms = result.steps_run as f64 * trial.dt_ms;
    for tr in &result.traces {
        let n_bins = tr.counts.len();
        if n_bins == 0 {
            continue;
        }
        let tail = ((500.0 / tr.bin_ms).round() as usize).clamp(1, n_bins);
        let mean = |from: usize| -> f64 {
            (from..n_bins).map(|b| tr.rate(b)).sum::<f64>() / (n_bins - from) as f64
        };
        println!(
            "  {:<7} mean {:7.1} Hz, last {:.0} ms {:7.1} Hz",
            tr.pop.name(),
            mean(0),
            (tail as f64) * tr.bin_ms,
            mean(n_bins - tail)
        );
    }
    println!(
        "simulated {span_ms} ms; traces: {}, readout: {}",
        trace_path.display(),
        readout_path.display()
    );
    Ok(())
}
