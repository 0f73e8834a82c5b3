//! Random-dot-kinematogram (RDK) stimuli.
//!
//! A stimulus is a short grayscale movie of white dots on a black background
//! viewed through a circular aperture. A `coherence` fraction of the dots
//! drifts horizontally at fixed speed (the signal); the rest move at the
//! same speed in random directions (the noise). All dot positions are
//! re-randomized on a fixed frame interval and whenever a dot leaves the
//! aperture.
//!
//! Submodules: [`gen`] simulates dot trajectories and rasterizes frames,
//! [`format`] defines the `.rdk` container, [`dataset`] builds and verifies
//! directories of stimuli with a JSON manifest.

mod dataset;
mod format;
mod gen;

pub use dataset::{
    build_dataset, build_dataset_with, default_coherences, load_manifest, DatasetEntry,
    DatasetManifest, MANIFEST_NAME,
};
pub use format::{load_stimulus, save_stimulus, RDK_MAGIC, RDK_VERSION};
pub use gen::{generate_stimulus, render, simulate_trajectory, DotTrack, Trajectory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizontal drift direction of the signal dots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    /// Unit sign of the horizontal displacement (+1 is rightward, screen x
    /// grows to the right).
    pub fn sign(self) -> f64 {
        match self {
            Direction::Left => -1.0,
            Direction::Right => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Direction::Left),
            "right" | "r" => Ok(Direction::Right),
            other => Err(Error::Config(format!(
                "unknown direction '{other}' (expected 'left' or 'right')"
            ))),
        }
    }
}

/// Generation parameters for one stimulus movie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RdkParams {
    /// Square frame edge length in pixels.
    pub frame_size: u32,
    /// Diameter of the circular aperture in pixels; must fit in the frame.
    pub aperture_diameter: u32,
    /// Number of dots alive on every frame.
    pub n_dots: u32,
    /// Rendered dot diameter in pixels.
    pub dot_diameter: u32,
    /// Displacement per frame step, in pixels, for every moving dot.
    pub speed: f64,
    /// All dots are repositioned on frames divisible by this interval.
    pub reposition_interval: u32,
    /// Movie length in frames.
    pub n_frames: u32,
    /// Fraction of dots moving coherently, in [0, 1].
    pub coherence: f64,
    /// Drift direction of the coherent dots.
    pub direction: Direction,
    /// Seed for the per-stimulus RNG stream.
    pub seed: u64,
}

impl Default for RdkParams {
    /// Canonical geometry at zero coherence, leftward, seed 0.
    fn default() -> Self {
        RdkParams::new(0.0, Direction::Left, 0)
    }
}

impl RdkParams {
    /// Canonical parameters: 300 px frames, 270 px aperture, 200 dots of
    /// 6 px moving 2 px/frame, repositioned every 4 frames, 120 frames.
    pub fn new(coherence: f64, direction: Direction, seed: u64) -> Self {
        RdkParams {
            frame_size: 300,
            aperture_diameter: 270,
            n_dots: 200,
            dot_diameter: 6,
            speed: 2.0,
            reposition_interval: 4,
            n_frames: 120,
            coherence,
            direction,
            seed,
        }
    }

    /// Number of signal dots: coherence * n_dots, rounded half up. Signal
    /// identity is fixed: dot indices `0..n_signal` are the signal dots.
    pub fn n_signal(&self) -> usize {
        (self.coherence * self.n_dots as f64 + 0.5).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.aperture_diameter > self.frame_size {
            return Err(Error::Config(format!(
                "aperture_diameter {} exceeds frame_size {}",
                self.aperture_diameter, self.frame_size
            )));
        }
        if !(0.0..=1.0).contains(&self.coherence) {
            return Err(Error::Config(format!(
                "coherence {} outside [0, 1]",
                self.coherence
            )));
        }
        if self.n_frames == 0 {
            return Err(Error::Config("n_frames must be positive".into()));
        }
        if self.reposition_interval == 0 {
            return Err(Error::Config("reposition_interval must be positive".into()));
        }
        if !self.speed.is_finite() || self.speed < 0.0 {
            return Err(Error::Config(format!(
                "speed {} must be finite and nonnegative",
                self.speed
            )));
        }
        Ok(())
    }
}

/// A rendered stimulus movie.
///
/// Frames are stored frame-major: byte index `(frame * H + y) * W + x`.
/// Background pixels are 0, dot pixels 255.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub params: RdkParams,
    pub data: Vec<u8>,
}

impl Stimulus {
    pub fn frame(&self, index: usize) -> &[u8] {
        let n = (self.params.frame_size * self.params.frame_size) as usize;
        &self.data[index * n..(index + 1) * n]
    }

    pub fn pixel(&self, frame: usize, x: u32, y: u32) -> u8 {
        self.frame(frame)[(y * self.params.frame_size + x) as usize]
    }
}
