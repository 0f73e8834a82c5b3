//! Behavioral aggregation: psychometric curve fitting, decision-time
//! summaries, and trend statistics over experiment sweeps.
//!
//! Convention: coherence is signed by direction, rightward positive, so a
//! leftward stimulus at coherence 0.4 sits at x = -0.4. Choice
//! probabilities are always "probability of choosing rightward". The
//! psychometric model is the logistic p(x) = 1 / (1 + exp(-k*x + b)):
//! `k` (sensitivity) scales discriminability, `b` (bias) shifts the curve
//! toward one choice. The fit minimizes per-point squared error weighted
//! by trial count.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stimulus::Direction;

/// One completed trial, as consumed by the aggregation functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Unsigned coherence of the stimulus, in [0, 1).
    pub coherence: f64,
    pub true_direction: Direction,
    pub choice: Direction,
    /// Time of the decision readout; trials that never crossed threshold
    /// carry the stimulus-end time.
    pub decision_time_ms: f64,
    /// False when the trial hit the end-of-stimulus fallback.
    pub decided: bool,
    /// Trial noise stream seed, kept for replay.
    pub seed: u64,
    /// Optional (t_ms, pool A rate, pool B rate) readout series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<Vec<(f64, f64, f64)>>,
}

impl TrialRecord {
    pub fn correct(&self) -> bool {
        self.choice == self.true_direction
    }

    /// Coherence signed by the stimulus direction, rightward positive.
    pub fn signed_coherence(&self) -> f64 {
        self.coherence * self.true_direction.sign()
    }
}

/// Fitted logistic psychometric curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsychometricFit {
    pub k: f64,
    pub b: f64,
    /// Weighted sum of squared residuals at the optimum.
    pub residual: f64,
    pub n_points: usize,
}

impl PsychometricFit {
    pub fn eval(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-self.k * x + self.b).exp())
    }
}

/// Choice statistics at one signed coherence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    pub signed_coherence: f64,
    pub n: usize,
    pub n_right: usize,
    pub p_right: f64,
    pub mean_decision_time_ms: f64,
    pub n_no_decision: usize,
}

/// Decision-time statistics at one unsigned coherence, with the moving
/// median smoothing applied over a +/-0.05 coherence window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtPoint {
    pub coherence: f64,
    pub n: usize,
    pub mean_decision_time_ms: f64,
    pub smoothed_decision_time_ms: f64,
}

/// Aggregated behavior of one trial set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralSummary {
    /// Per signed coherence, ascending.
    pub points: Vec<CoherencePoint>,
    /// Per unsigned coherence, ascending.
    pub dt_curve: Vec<DtPoint>,
    pub fit: PsychometricFit,
    /// Fraction correct over trials with nonzero coherence (zero-coherence
    /// stimuli have no correct answer); None when no such trials exist.
    pub accuracy: Option<f64>,
    pub n_trials: usize,
    pub n_no_decision: usize,
}

/// Least-squares fit of the logistic curve to (x, p_choose_right, n)
/// points, weighted by n.
///
/// Starts from a logit-space linear regression and refines with damped
/// Gauss-Newton until the step size falls below 1e-10 (relative), capped
/// at 200 iterations. Deterministic for fixed input.
pub fn fit_psychometric(points: &[(f64, f64, f64)]) -> Result<PsychometricFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if xs.len() < 3 {
        return Err(Error::Analysis(format!(
            "psychometric fit needs >= 3 distinct coherences, got {}",
            xs.len()
        )));
    }
    for &(x, p, n) in points {
        if !(x.is_finite() && (0.0..=1.0).contains(&p) && n > 0.0) {
            return Err(Error::Analysis(format!(
                "invalid psychometric point (x={x}, p={p}, n={n})"
            )));
        }
    }
    let (p_min, p_max) = points
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &(_, p, _)| {
            (lo.min(p), hi.max(p))
        });
    if p_max - p_min < 1e-9 {
        return Err(Error::Analysis(
            "degenerate psychometric data: all probabilities equal".into(),
        ));
    }

    // Only relative weights matter; normalizing to mean 1 makes the fit
    // invariant to duplicating the whole data set.
    let mean_n: f64 = points.iter().map(|p| p.2).sum::<f64>() / points.len() as f64;
    let points: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(x, p, n)| (x, p, n / mean_n))
        .collect();
    let points = &points[..];

    // Initial guess: logit(p) ~ k*x - b by weighted linear regression,
    // with probabilities clipped away from {0, 1}.
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, p, n) in points {
        let pc = p.clamp(0.01, 0.99);
        let y = (pc / (1.0 - pc)).ln();
        sw += n;
        swx += n * x;
        swy += n * y;
        swxx += n * x * x;
        swxy += n * x * y;
    }
    let det = sw * swxx - swx * swx;
    let (mut k, mut b) = if det.abs() > 1e-12 {
        let slope = (sw * swxy - swx * swy) / det;
        let intercept = (swy - slope * swx) / sw;
        (slope, -intercept)
    } else {
        (1.0, 0.0)
    };

    let sse = |k: f64, b: f64| -> f64 {
        points
            .iter()
            .map(|&(x, p, n)| {
                let m = 1.0 / (1.0 + (-k * x + b).exp());
                n * (p - m) * (p - m)
            })
            .sum()
    };

    let mut best = sse(k, b);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // Normal equations for the damped Gauss-Newton step.
        let (mut jkk, mut jkb, mut jbb, mut gk, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, p, n) in points {
            let m = 1.0 / (1.0 + (-k * x + b).exp());
            let r = p - m;
            let d = m * (1.0 - m);
            let dk = d * x;
            let db = -d;
            jkk += n * dk * dk;
            jkb += n * dk * db;
            jbb += n * db * db;
            gk += n * dk * r;
            gb += n * db * r;
        }
        let mut stepped = false;
        for _ in 0..30 {
            let akk = jkk + lambda * (1.0 + jkk);
            let abb = jbb + lambda * (1.0 + jbb);
            let det = akk * abb - jkb * jkb;
            if det.abs() < 1e-300 {
                break;
            }
            let dk_step = (gk * abb - jkb * gb) / det;
            let db_step = (akk * gb - jkb * gk) / det;
            let (k2, b2) = (k + dk_step, b + db_step);
            let s2 = sse(k2, b2);
            if s2 <= best {
                let rel = (dk_step.abs() + db_step.abs()) / (1.0 + k.abs() + b.abs());
                k = k2;
                b = b2;
                best = s2;
                lambda = (lambda / 3.0).max(1e-12);
                stepped = true;
                if rel < 1e-12 {
                    return Ok(PsychometricFit {
                        k,
                        b,
                        residual: best,
                        n_points: points.len(),
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    Ok(PsychometricFit {
        k,
        b,
        residual: best,
        n_points: points.len(),
    })
}

/// Groups trials by signed coherence, fits the psychometric curve, and
/// builds the smoothed decision-time curve.
pub fn summarize(trials: &[TrialRecord]) -> Result<BehavioralSummary> {
    if trials.is_empty() {
        return Err(Error::Analysis("no trials to summarize".into()));
    }
    let has = |d: Direction| trials.iter().any(|t| t.true_direction == d);
    if !has(Direction::Left) || !has(Direction::Right) {
        return Err(Error::Analysis(
            "trial set covers only one stimulus direction".into(),
        ));
    }

    // Key signed coherence on a 1e-4 grid so float noise cannot split
    // groups.
    let key = |x: f64| -> i64 { (x * 1e4).round() as i64 };
    let mut signed: std::collections::BTreeMap<i64, Vec<&TrialRecord>> = Default::default();
    let mut unsigned: std::collections::BTreeMap<i64, Vec<&TrialRecord>> = Default::default();
    for t in trials {
        signed.entry(key(t.signed_coherence())).or_default().push(t);
        unsigned.entry(key(t.coherence)).or_default().push(t);
    }

    let points: Vec<CoherencePoint> = signed
        .iter()
        .map(|(&kx, ts)| {
            let n = ts.len();
            let n_right = ts.iter().filter(|t| t.choice == Direction::Right).count();
            let dt: f64 = ts.iter().map(|t| t.decision_time_ms).sum::<f64>() / n as f64;
            CoherencePoint {
                signed_coherence: kx as f64 / 1e4,
                n,
                n_right,
                p_right: n_right as f64 / n as f64,
                mean_decision_time_ms: dt,
                n_no_decision: ts.iter().filter(|t| !t.decided).count(),
            }
        })
        .collect();

    let fit_points: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| (p.signed_coherence, p.p_right, p.n as f64))
        .collect();
    let fit = fit_psychometric(&fit_points)?;

    let raw_dt: Vec<(f64, usize, f64)> = unsigned
        .iter()
        .map(|(&kx, ts)| {
            let dt = ts.iter().map(|t| t.decision_time_ms).sum::<f64>() / ts.len() as f64;
            (kx as f64 / 1e4, ts.len(), dt)
        })
        .collect();
    let dt_curve: Vec<DtPoint> = raw_dt
        .iter()
        .map(|&(c, n, dt)| DtPoint {
            coherence: c,
            n,
            mean_decision_time_ms: dt,
            smoothed_decision_time_ms: window_median(&raw_dt, c, 0.05),
        })
        .collect();

    let graded: Vec<&TrialRecord> = trials.iter().filter(|t| t.coherence > 0.0).collect();
    let accuracy = if graded.is_empty() {
        None
    } else {
        Some(graded.iter().filter(|t| t.correct()).count() as f64 / graded.len() as f64)
    };

    Ok(BehavioralSummary {
        points,
        dt_curve,
        fit,
        accuracy,
        n_trials: trials.len(),
        n_no_decision: trials.iter().filter(|t| !t.decided).count(),
    })
}

/// Median of the values whose level lies within `half_width` of `center`.
fn window_median(series: &[(f64, usize, f64)], center: f64, half_width: f64) -> f64 {
    let mut vals: Vec<f64> = series
        .iter()
        .filter(|&&(c, _, _)| (c - center).abs() <= half_width + 1e-12)
        .map(|&(_, _, v)| v)
        .collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}

/// Ordinary least-squares trend of a metric against a sweep level, with a
/// two-sided t-test on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendStat {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub p_value: f64,
    pub n: usize,
}

pub fn regress_metric_vs_level(levels: &[f64], metric: &[f64]) -> Result<TrendStat> {
    let n = levels.len();
    if n != metric.len() || n < 3 {
        return Err(Error::Analysis(format!(
            "regression needs equal-length series of >= 3 points, got {} and {}",
            n,
            metric.len()
        )));
    }
    let nf = n as f64;
    let mx = levels.iter().sum::<f64>() / nf;
    let my = metric.iter().sum::<f64>() / nf;
    let sxx: f64 = levels.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = levels
        .iter()
        .zip(metric)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    if sxx < 1e-12 {
        return Err(Error::Analysis(
            "regression levels have zero variance".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = levels
        .iter()
        .zip(metric)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let df = nf - 2.0;
    let stderr = (sse / df / sxx).sqrt();
    let p_value = if stderr < 1e-150 {
        if slope.abs() < 1e-150 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = (slope / stderr).abs();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok(TrendStat {
        slope,
        intercept,
        stderr,
        p_value,
        n,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Analysis(
            "rank correlation needs equal-length series of >= 2 points".into(),
        ));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx < 1e-12 || syy < 1e-12 {
        return Err(Error::Analysis(
            "rank correlation undefined for a constant series".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &m in &idx[i..=j] {
            out[m] = rank;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic_points(k: f64, b: f64, xs: &[f64]) -> Vec<(f64, f64, f64)> {
        xs.iter()
            .map(|&x| (x, 1.0 / (1.0 + (-k * x + b).exp()), 40.0))
            .collect()
    }

    const XS: [f64; 12] = [
        -0.8, -0.4, -0.2, -0.1, -0.05, -0.02, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8,
    ];

    #[test]
    fn fit_recovers_noiseless_parameters() {
        let pts = logistic_points(19.31, 0.0, &XS);
        let fit = fit_psychometric(&pts).unwrap();
        assert!(
            (fit.k - 19.31).abs() / 19.31 < 0.01,
            "k = {} off target",
            fit.k
        );
        assert!(fit.b.abs() < 0.05, "b = {}", fit.b);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn fit_recovers_bias() {
        let pts = logistic_points(12.0, 0.7, &XS);
        let fit = fit_psychometric(&pts).unwrap();
        assert!((fit.k - 12.0).abs() < 0.05);
        assert!((fit.b - 0.7).abs() < 0.01);
    }

    #[test]
    fn symmetric_data_has_zero_bias() {
        let pts = logistic_points(15.0, 0.0, &XS);
        let fit = fit_psychometric(&pts).unwrap();
        assert!(fit.b.abs() < 1e-6);
    }

    #[test]
    fn reflection_flips_bias_keeps_sensitivity() {
        // Mirroring the task swaps both the stimulus axis and the choice
        // labels: (x, p) -> (-x, 1-p).
        let pts = logistic_points(15.0, 0.4, &XS);
        let mirrored: Vec<_> = pts.iter().map(|&(x, p, n)| (-x, 1.0 - p, n)).collect();
        let a = fit_psychometric(&pts).unwrap();
        let b = fit_psychometric(&mirrored).unwrap();
        assert!((a.k - b.k).abs() < 1e-6, "{} vs {}", a.k, b.k);
        assert!((a.b + b.b).abs() < 1e-6, "{} vs {}", a.b, b.b);
    }

    #[test]
    fn fit_tolerates_sampling_noise() {
        // Binomial jitter around the true curve must not break recovery.
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(7, "test-psych-noise", &[]);
        let pts: Vec<(f64, f64, f64)> = XS
            .iter()
            .map(|&x| {
                let p = 1.0 / (1.0 + (-18.0_f64 * x).exp());
                let n = 60;
                let hits = (0..n).filter(|_| rng.random::<f64>() < p).count();
                (x, hits as f64 / n as f64, n as f64)
            })
            .collect();
        let fit = fit_psychometric(&pts).unwrap();
        assert!((fit.k - 18.0).abs() < 5.0, "k = {}", fit.k);
    }

    #[test]
    fn degenerate_probabilities_rejected() {
        let pts: Vec<_> = XS.iter().map(|&x| (x, 0.5, 10.0)).collect();
        assert!(matches!(
            fit_psychometric(&pts),
            Err(Error::Analysis(_))
        ));
        assert!(fit_psychometric(&pts[..2]).is_err());
    }

    fn record(coh: f64, dir: Direction, choice: Direction, dt: f64) -> TrialRecord {
        TrialRecord {
            coherence: coh,
            true_direction: dir,
            choice,
            decision_time_ms: dt,
            decided: true,
            seed: 0,
            readout: None,
        }
    }

    fn perfect_trials() -> Vec<TrialRecord> {
        let mut out = Vec::new();
        for &c in &[0.1, 0.4, 0.8] {
            for _ in 0..10 {
                out.push(record(c, Direction::Right, Direction::Right, 800.0 - 500.0 * c));
                out.push(record(c, Direction::Left, Direction::Left, 800.0 - 500.0 * c));
            }
        }
        out
    }

    #[test]
    fn perfect_performance_pins_probabilities() {
        let s = summarize(&perfect_trials()).unwrap();
        let hi = s
            .points
            .iter()
            .find(|p| (p.signed_coherence - 0.8).abs() < 1e-9)
            .unwrap();
        let lo = s
            .points
            .iter()
            .find(|p| (p.signed_coherence + 0.8).abs() < 1e-9)
            .unwrap();
        assert_eq!(hi.p_right, 1.0);
        assert_eq!(lo.p_right, 0.0);
        assert_eq!(s.accuracy, Some(1.0));
        assert!(s.fit.k > 0.0);
    }

    #[test]
    fn summary_is_idempotent_under_duplication() {
        let trials = perfect_trials();
        let doubled: Vec<_> = trials.iter().chain(&trials).cloned().collect();
        let a = summarize(&trials).unwrap();
        let b = summarize(&doubled).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(pa.p_right, pb.p_right);
            assert_eq!(pa.mean_decision_time_ms, pb.mean_decision_time_ms);
            assert_eq!(pa.n * 2, pb.n);
        }
        assert!((a.fit.k - b.fit.k).abs() < 1e-9);
    }

    #[test]
    fn single_direction_input_rejected() {
        let trials: Vec<_> = (0..10)
            .map(|_| record(0.4, Direction::Right, Direction::Right, 500.0))
            .collect();
        assert!(matches!(summarize(&trials), Err(Error::Analysis(_))));
    }

    #[test]
    fn decision_time_curve_smoothing_uses_neighbor_median() {
        // Levels 0, 0.05, 0.1 fall in one +/-0.05 window; 0.4 stands alone.
        let mut trials = Vec::new();
        for (c, dt) in [(0.0, 900.0), (0.05, 700.0), (0.1, 650.0), (0.4, 400.0)] {
            for dir in [Direction::Left, Direction::Right] {
                for i in 0..5 {
                    // Mostly correct choices keep the fit non-degenerate.
                    let choice = if i == 0 && c == 0.0 { Direction::Right } else { dir };
                    trials.push(record(c, dir, choice, dt));
                }
            }
        }
        let s = summarize(&trials).unwrap();
        let at = |c: f64| {
            s.dt_curve
                .iter()
                .find(|p| (p.coherence - c).abs() < 1e-9)
                .unwrap()
        };
        assert_eq!(at(0.05).smoothed_decision_time_ms, 700.0);
        assert_eq!(at(0.0).smoothed_decision_time_ms, 800.0);
        assert_eq!(at(0.4).smoothed_decision_time_ms, 400.0);
    }

    #[test]
    fn regression_matches_hand_computed_oracle() {
        // OLS on these numbers gives slope -0.466667, intercept 0.91,
        // t = -9.899495 with 2 dof, two-sided p = 0.01005051.
        let levels = [0.0, 0.3, 0.6, 0.9];
        let acc = [0.9, 0.8, 0.6, 0.5];
        let t = regress_metric_vs_level(&levels, &acc).unwrap();
        assert!((t.slope - (-0.4666666666666667)).abs() < 1e-12);
        assert!((t.intercept - 0.91).abs() < 1e-12);
        assert!((t.p_value - 0.010050506338833466).abs() < 1e-6);
    }

    #[test]
    fn exact_line_and_constant_metric() {
        let levels = [0.0, 1.0, 2.0, 3.0];
        let exact: Vec<f64> = levels.iter().map(|x| 2.0 * x + 1.0).collect();
        let t = regress_metric_vs_level(&levels, &exact).unwrap();
        assert!((t.slope - 2.0).abs() < 1e-12);
        assert!(t.p_value < 1e-9);
        let flat = [0.7; 4];
        let t = regress_metric_vs_level(&levels, &flat).unwrap();
        assert_eq!(t.slope, 0.0);
        assert!(t.p_value > 0.99);
    }

    #[test]
    fn zero_variance_levels_rejected() {
        assert!(regress_metric_vs_level(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spearman_endpoints_and_ties() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let inc = [2.0, 4.0, 5.0, 7.0, 11.0];
        assert!((spearman(&x, &inc).unwrap() - 1.0).abs() < 1e-12);
        let dec: Vec<f64> = inc.iter().rev().cloned().collect();
        assert!((spearman(&x, &dec).unwrap() + 1.0).abs() < 1e-12);
        let tied = [1.0, 1.0, 2.0, 2.0, 3.0];
        let rho = spearman(&x, &tied).unwrap();
        assert!(rho > 0.9 && rho <= 1.0);
        assert!(spearman(&x, &[1.0; 5]).is_err());
    }
}
