//! Dot trajectory simulation and frame rasterization.

use rand::Rng;

use crate::error::Result;
use crate::rng::derive_rng;
use crate::stimulus::{RdkParams, Stimulus};

/// Movement history of a single dot across the movie.
#[derive(Debug, Clone)]
pub struct DotTrack {
    /// Center position per frame, in pixel coordinates.
    pub positions: Vec<(f64, f64)>,
    /// True on frames where the position was drawn fresh rather than
    /// reached by a motion step (frame 0, interval resets, aperture exits).
    pub reset: Vec<bool>,
    /// Signal dots drift coherently; noise dots move in random directions.
    pub is_signal: bool,
}

/// Trajectories for all dots of one stimulus.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dots: Vec<DotTrack>,
}

/// Placement grid: freshly drawn positions are snapped to multiples of
/// 2^-20 px, so adding the (dyadic) speed to a coordinate is exact in f64
/// and coherent steps displace by exactly +-speed.
const SNAP: f64 = (1u64 << 20) as f64;

fn snap(v: f64) -> f64 {
    (v * SNAP).round() / SNAP
}

/// Simulates dot positions for every frame without rendering.
///
/// Update order per frame: dots are visited in index order; a fresh
/// placement consumes two uniforms (radius, angle), a noise step consumes
/// one (direction). This order is part of the determinism contract.
pub fn simulate_trajectory(params: &RdkParams) -> Result<Trajectory> {
    params.validate()?;
    let mut rng = derive_rng(params.seed, "rdk-movie", &[]);
    let center = (params.frame_size as f64 - 1.0) / 2.0;
    let radius = params.aperture_diameter as f64 / 2.0;
    let n_dots = params.n_dots as usize;
    let n_signal = params.n_signal();
    let n_frames = params.n_frames as usize;

    let place = |rng: &mut rand::rngs::SmallRng| -> (f64, f64) {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        (
            snap(center + r * theta.cos()),
            snap(center + r * theta.sin()),
        )
    };

    let mut dots: Vec<DotTrack> = (0..n_dots)
        .map(|i| {
            let mut track = DotTrack {
                positions: Vec::with_capacity(n_frames),
                reset: Vec::with_capacity(n_frames),
                is_signal: i < n_signal,
            };
            track.positions.push(place(&mut rng));
            track.reset.push(true);
            track
        })
        .collect();

    for frame in 1..n_frames {
        let interval_reset = frame % params.reposition_interval as usize == 0;
        for dot in dots.iter_mut() {
            let (x, y) = *dot.positions.last().unwrap();
            if interval_reset {
                dot.positions.push(place(&mut rng));
                dot.reset.push(true);
                continue;
            }
            let (dx, dy) = if dot.is_signal {
                (params.direction.sign() * params.speed, 0.0)
            } else {
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                (params.speed * theta.cos(), params.speed * theta.sin())
            };
            let (nx, ny) = (x + dx, y + dy);
            let exited = (nx - center).powi(2) + (ny - center).powi(2) > radius * radius;
            if exited {
                dot.positions.push(place(&mut rng));
                dot.reset.push(true);
            } else {
                dot.positions.push((nx, ny));
                dot.reset.push(false);
            }
        }
    }

    Ok(Trajectory { dots })
}

/// Rasterizes trajectories into the frame-major 8-bit tensor. Dots are
/// filled circles: a pixel is lit when its integer coordinate lies within
/// dot_diameter/2 of the dot center. Background 0, dots 255, no
/// anti-aliasing.
pub fn render(params: &RdkParams, trajectory: &Trajectory) -> Stimulus {
    let size = params.frame_size as usize;
    let n_frames = params.n_frames as usize;
    let mut data = vec![0u8; n_frames * size * size];
    let r = params.dot_diameter as f64 / 2.0;
    let r2 = r * r;

    for (frame, frame_data) in data.chunks_exact_mut(size * size).enumerate() {
        for dot in &trajectory.dots {
            let (x, y) = dot.positions[frame];
            let x_lo = ((x - r).ceil().max(0.0)) as usize;
            let x_hi = ((x + r).floor().min(size as f64 - 1.0)) as usize;
            let y_lo = ((y - r).ceil().max(0.0)) as usize;
            let y_hi = ((y + r).floor().min(size as f64 - 1.0)) as usize;
            for py in y_lo..=y_hi {
                let dy2 = (py as f64 - y).powi(2);
                for px in x_lo..=x_hi {
                    if (px as f64 - x).powi(2) + dy2 <= r2 {
                        frame_data[py * size + px] = 255;
                    }
                }
            }
        }
    }

    Stimulus {
        params: params.clone(),
        data,
    }
}

/// Generates the rendered stimulus for `params`.
pub fn generate_stimulus(params: &RdkParams) -> Result<Stimulus> {
    let trajectory = simulate_trajectory(params)?;
    Ok(render(params, &trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::Direction;
    use proptest::prelude::*;

    fn small_params(coherence: f64, direction: Direction, seed: u64) -> RdkParams {
        let mut p = RdkParams::new(coherence, direction, seed);
        p.n_frames = 24;
        p
    }

    #[test]
    fn rejects_invalid_params() {
        let mut p = RdkParams::new(0.5, Direction::Left, 1);
        p.coherence = 1.5;
        assert!(generate_stimulus(&p).is_err());
        let mut p = RdkParams::new(0.5, Direction::Left, 1);
        p.aperture_diameter = 400;
        assert!(generate_stimulus(&p).is_err());
        let mut p = RdkParams::new(0.5, Direction::Left, 1);
        p.n_frames = 0;
        assert!(generate_stimulus(&p).is_err());
    }

    #[test]
    fn signal_count_rounds_half_up() {
        // 1% steps on 200 dots are exact: 2 dots per step.
        for (coherence, expected) in [(0.0, 0), (0.01, 2), (0.5, 100), (0.99, 198), (1.0, 200)] {
            let p = RdkParams::new(coherence, Direction::Right, 0);
            assert_eq!(p.n_signal(), expected, "coherence {coherence}");
        }
        // Half-dot case rounds up.
        let mut p = RdkParams::new(0.5, Direction::Right, 0);
        p.n_dots = 3;
        assert_eq!(p.n_signal(), 2);
    }

    #[test]
    fn high_coherence_signal_dots_displace_exactly() {
        let p = small_params(0.99, Direction::Right, 1234);
        let t = simulate_trajectory(&p).unwrap();
        assert_eq!(t.dots.iter().filter(|d| d.is_signal).count(), 198);
        let mut checked = 0usize;
        for dot in t.dots.iter().filter(|d| d.is_signal) {
            for frame in 1..dot.positions.len() {
                if dot.reset[frame] {
                    continue;
                }
                let dx = dot.positions[frame].0 - dot.positions[frame - 1].0;
                let dy = dot.positions[frame].1 - dot.positions[frame - 1].1;
                assert_eq!((dx, dy), (2.0, 0.0));
                checked += 1;
            }
        }
        assert!(checked > 500, "expected many non-reset signal steps");
    }

    #[test]
    fn leftward_signal_dots_move_left() {
        let p = small_params(1.0, Direction::Left, 99);
        let t = simulate_trajectory(&p).unwrap();
        let dot = &t.dots[0];
        let step = (1..dot.positions.len()).find(|&f| !dot.reset[f]).unwrap();
        assert_eq!(dot.positions[step].0 - dot.positions[step - 1].0, -2.0);
    }

    #[test]
    fn zero_coherence_has_no_signal_dots() {
        let p = small_params(0.0, Direction::Right, 5);
        let t = simulate_trajectory(&p).unwrap();
        assert!(t.dots.iter().all(|d| !d.is_signal));
        // Noise steps preserve speed: each non-reset displacement has
        // magnitude exactly close to `speed`.
        let dot = &t.dots[17];
        for frame in 1..dot.positions.len() {
            if dot.reset[frame] {
                continue;
            }
            let dx = dot.positions[frame].0 - dot.positions[frame - 1].0;
            let dy = dot.positions[frame].1 - dot.positions[frame - 1].1;
            let step = (dx * dx + dy * dy).sqrt();
            assert!((step - 2.0).abs() < 1e-9, "noise step magnitude {step}");
        }
    }

    #[test]
    fn interval_frames_reset_every_dot() {
        let p = small_params(0.5, Direction::Right, 7);
        let t = simulate_trajectory(&p).unwrap();
        for dot in &t.dots {
            for (frame, reset) in dot.reset.iter().enumerate() {
                if frame % p.reposition_interval as usize == 0 {
                    assert!(reset, "frame {frame} should be a reset frame");
                }
            }
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let p = RdkParams::new(0.37, Direction::Left, 2024);
        let a = generate_stimulus(&p).unwrap();
        let b = generate_stimulus(&p).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_stimulus(&small_params(0.5, Direction::Left, 1)).unwrap();
        let b = generate_stimulus(&small_params(0.5, Direction::Left, 2)).unwrap();
        assert_ne!(a.data, b.data);
    }

    #[test]
    fn frames_are_binary_and_nonempty() {
        let s = generate_stimulus(&small_params(0.2, Direction::Right, 3)).unwrap();
        assert!(s.data.iter().all(|&v| v == 0 || v == 255));
        for frame in 0..s.params.n_frames as usize {
            let lit = s.frame(frame).iter().filter(|&&v| v == 255).count();
            // 200 dots of ~28 px each, minus overlaps.
            assert!(lit > 1000, "frame {frame} has only {lit} lit pixels");
            assert!(lit <= 200 * 38);
        }
    }

    #[test]
    fn single_dot_renders_as_filled_circle() {
        let mut p = RdkParams::new(0.0, Direction::Right, 0);
        p.n_dots = 1;
        p.n_frames = 1;
        let t = Trajectory {
            dots: vec![DotTrack {
                positions: vec![(150.0, 150.0)],
                reset: vec![true],
                is_signal: false,
            }],
        };
        let s = render(&p, &t);
        assert_eq!(s.pixel(0, 150, 150), 255);
        assert_eq!(s.pixel(0, 153, 150), 255); // on the rim
        assert_eq!(s.pixel(0, 154, 150), 0); // outside
        assert_eq!(s.pixel(0, 152, 152), 255); // sqrt(8) < 3
        assert_eq!(s.pixel(0, 153, 153), 0); // sqrt(18) > 3
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Every dot center stays inside the aperture on every frame.
        #[test]
        fn dots_stay_inside_aperture(
            coherence in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let p = small_params(coherence, Direction::Right, seed);
            let t = simulate_trajectory(&p).unwrap();
            let center = (p.frame_size as f64 - 1.0) / 2.0;
            let radius = p.aperture_diameter as f64 / 2.0;
            for dot in &t.dots {
                prop_assert_eq!(dot.positions.len(), p.n_frames as usize);
                for &(x, y) in &dot.positions {
                    let d = ((x - center).powi(2) + (y - center).powi(2)).sqrt();
                    // Snapping can place a fresh dot marginally past the rim.
                    prop_assert!(d <= radius + 1e-5, "dot at distance {}", d);
                }
            }
        }

        /// The number of coherently moving dots never decreases with
        /// coherence.
        #[test]
        fn signal_count_monotone_in_coherence(
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let pl = RdkParams::new(lo, Direction::Left, 0);
            let ph = RdkParams::new(hi, Direction::Left, 0);
            prop_assert!(pl.n_signal() <= ph.n_signal());
        }
    }
}
