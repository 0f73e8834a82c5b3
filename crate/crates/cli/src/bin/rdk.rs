//! Stimulus tooling: generate single movies, build checksummed datasets,
//! inspect files, and export retinal drive currents for debugging.
//!
//! Exit codes: 0 success, 2 rejected input, 3 numerical divergence,
//! 1 other failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ndm_core::config::{resolve_workers, ConfigSchema};
use ndm_core::lgn::{compute_lgn_drive, DEFAULT_DRIVE_GAIN};
use ndm_core::stimulus::{
    build_dataset_with, default_coherences, load_manifest, load_stimulus, save_stimulus,
    Direction, RdkParams,
};
use ndm_core::{Error, Result};

#[derive(Parser)]
#[command(name = "rdk", version, about = "Random-dot motion stimulus tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one stimulus movie and write it as an .rdk file.
    Gen {
        /// Fraction of dots moving coherently, 0 to 1.
        #[arg(long)]
        coherence: f64,
        /// Signal direction: left or right.
        #[arg(long)]
        direction: String,
        /// Stimulus RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Optional config file supplying the [stimulus] geometry.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a stimulus dataset directory with a checksum manifest.
    BuildDataset {
        /// Dataset directory to create.
        #[arg(long)]
        root: PathBuf,
        /// Dataset master seed; per-file seeds derive from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated coherence levels. Default: 0.00 to 0.99 in
        /// steps of 0.01.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        coherences: Option<Vec<f64>>,
        /// Movies per (coherence, direction).
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Optional config file supplying the [stimulus] geometry.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads (default: NDM_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print header information for an .rdk file or a dataset directory.
    Info {
        /// An .rdk file or a dataset directory with a manifest.
        #[arg(long)]
        input: PathBuf,
        /// For datasets: re-hash every file against the manifest.
        #[arg(long)]
        verify: bool,
    },
    /// Encode a stimulus into per-cell drive currents (debug export).
    LgnDrive {
        /// Input .rdk file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output binary file (layout documented in the README).
        #[arg(long)]
        out: PathBuf,
        /// Drive gain override, pA at the peak temporal tap.
        #[arg(long)]
        gain: Option<f64>,
        /// Optional config file supplying drive_gain.
        #[arg(long)]
        config: Option<PathBuf>,
    },
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
        Command::Gen {
            coherence,
            direction,
            seed,
            out,
            config,
        } => gen(coherence, &direction, seed, &out, config.as_deref()),
        Command::BuildDataset {
            root,
            seed,
            coherences,
            repeats,
            config,
            workers,
        } => build(&root, seed, coherences, repeats, config.as_deref(), workers),
        Command::Info { input, verify } => info(&input, verify),
        Command::LgnDrive {
            input,
            out,
            gain,
            config,
        } => lgn_drive(&input, &out, gain, config.as_deref()),
    }
}

/// The [stimulus] geometry and drive gain from a config file, or the
/// defaults.
fn stimulus_base(config: Option<&Path>) -> Result<(RdkParams, f64)> {
    match config {
        Some(path) => {
            let cfg = ConfigSchema::load(path)?;
            Ok((cfg.stimulus, cfg.drive_gain))
        }
        None => Ok((RdkParams::default(), DEFAULT_DRIVE_GAIN)),
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

fn gen(coherence: f64, direction: &str, seed: u64, out: &Path, config: Option<&Path>) -> Result<()> {
    let (mut params, _) = stimulus_base(config)?;
    params.coherence = coherence;
    params.direction = direction.parse::<Direction>()?;
    params.seed = seed;
    let stimulus = ndm_core::stimulus::generate_stimulus(&params)?;
    save_stimulus(&stimulus, out)?;
    println!(
        "{}: {}x{}x{} frames, coherence {}, {} signal dots of {}, seed {}",
        out.display(),
        params.frame_size,
        params.frame_size,
        params.n_frames,
        params.coherence,
        params.n_signal(),
        params.n_dots,
        params.seed
    );
    Ok(())
}

fn build(
    root: &Path,
    seed: u64,
    coherences: Option<Vec<f64>>,
    repeats: usize,
    config: Option<&Path>,
    workers: Option<usize>,
) -> Result<()> {
    init_pool(workers)?;
    let (base, _) = stimulus_base(config)?;
    let coherences = coherences.unwrap_or_else(default_coherences);
    let manifest = build_dataset_with(root, &base, &coherences, repeats, seed)?;
    println!(
        "{}: {} stimuli over {} coherence level(s), {} repeat(s), seed {}",
        root.display(),
        manifest.entries.len(),
        coherences.len(),
        repeats,
        seed
    );
    Ok(())
}

fn info(input: &Path, verify: bool) -> Result<()> {
    if input.is_dir() {
        let manifest = load_manifest(input)?;
        let mut levels: Vec<f64> = manifest.entries.iter().map(|e| e.coherence).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let repeats = manifest
            .entries
            .iter()
            .map(|e| e.repeat + 1)
            .max()
            .unwrap_or(0);
        println!(
            "dataset {}: {} entries, {} coherence level(s), up to {} repeat(s)",
            input.display(),
            manifest.entries.len(),
            levels.len(),
            repeats
        );
        println!(
            "coherences: {}",
            levels
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        );
        if verify {
            let bad = manifest.verify(input)?;
            if bad.is_empty() {
                println!("verify: all {} checksums match", manifest.entries.len());
            } else {
                return Err(Error::StimulusFormat(format!(
                    "verify: {} file(s) corrupt: {}",
                    bad.len(),
                    bad.join(", ")
                )));
            }
        }
        return Ok(());
    }
    let stimulus = load_stimulus(input)?;
    let p = &stimulus.params;
    println!(
        "{}: {}x{}x{} frames ({} bytes), coherence {}, direction {}, seed {}",
        input.display(),
        p.frame_size,
        p.frame_size,
        p.n_frames,
        stimulus.data.len(),
        p.coherence,
        p.direction,
        p.seed
    );
    println!(
        "aperture {} px, {} dots of {} px, speed {} px/frame, reposition every {} frames",
        p.aperture_diameter, p.n_dots, p.dot_diameter, p.speed, p.reposition_interval
    );
    Ok(())
}

const DRIVE_MAGIC: &[u8; 8] = b"NDMDRIVE";

fn lgn_drive(input: &Path, out: &Path, gain: Option<f64>, config: Option<&Path>) -> Result<()> {
    let (_, config_gain) = stimulus_base(config)?;
    let gain = gain.unwrap_or(config_gain);
    let stimulus = load_stimulus(input)?;
    let drive = compute_lgn_drive(&stimulus, gain)?;

    let mut bytes =
        Vec::with_capacity(32 + 4 * (drive.on.len() + drive.off.len()));
    bytes.extend_from_slice(DRIVE_MAGIC);
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&(drive.n_steps as u32).to_le_bytes());
    bytes.extend_from_slice(&(drive.n_cells as u32).to_le_bytes());
    bytes.extend_from_slice(&drive.dt_ms.to_le_bytes());
    for v in drive.on.iter().chain(drive.off.iter()) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(out, &bytes).map_err(|e| Error::io(out, e))?;

    let peak_on = drive.on.iter().cloned().fold(f32::MIN, f32::max);
    let peak_off = drive.off.iter().cloned().fold(f32::MIN, f32::max);
    println!(
        "{}: {} steps x {} cells per class at dt {} ms, gain {}; peak on {:.1} pA, peak off {:.1} pA",
        out.display(),
        drive.n_steps,
        drive.n_cells,
        drive.dt_ms,
        gain,
        peak_on,
        peak_off
    );
    Ok(())
}
