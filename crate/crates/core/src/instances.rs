//! Random curve pairs for tests and benchmarks.

use rand::Rng;

use crate::roc::{dominance, Dominance, RocCurve, RocPoint, DEFAULT_DOMINANCE_RESOLUTION};

/// ROC of logistic negatives at location 0 and logistic positives at
/// `separation` with scale ratio `spread`, sampled at `k` equidistant
/// thresholds.
pub fn logistic_curve(k: usize, separation: f64, spread: f64) -> RocCurve {
    let (lo, hi) = (-7.0, separation + 7.0 * spread);
    let points = (0..k)
        .map(|j| {
            // Highest threshold first so fpr ascends.
            let t = hi - (hi - lo) * (j as f64 + 0.5) / k as f64;
            RocPoint::new(1.0 / (1.0 + t.exp()), 1.0 / (1.0 + ((t - separation) / spread).exp()))
        })
        .collect();
    RocCurve::from_points_unchecked(points)
}

/// Sorted uniform coordinates: monotone but neither smooth nor concave.
pub fn rough_curve(rng: &mut impl Rng, k: usize) -> RocCurve {
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let mut ys: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    RocCurve::from_points_unchecked(xs.into_iter().zip(ys).map(|(x, y)| RocPoint::new(x, y)).collect())
}

/// Raises every point of `down` by `lift(i) * (1 - tpr)` at the same fpr.
/// The result dominates `down` because both curves share their fpr knots.
pub fn lifted(down: &RocCurve, lift: impl Fn(usize) -> f64) -> RocCurve {
    let mut prev = 0.0_f64;
    let points = down
        .points()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let tpr = (q.tpr + lift(i).clamp(0.0, 1.0) * (1.0 - q.tpr)).max(prev).min(1.0);
            prev = tpr;
            RocPoint::new(q.fpr, tpr)
        })
        .collect();
    RocCurve::from_points_unchecked(points)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePair {
    pub up: RocCurve,
    pub down: RocCurve,
}

/// A dominating pair of length `k`. Smooth pairs come from two logistic
/// score models; rough pairs lift a sorted-uniform curve by a slowly varying
/// amount. When `jitter` is set the up fprs are moved by up to a third of the
/// local spacing, and pairs that stop dominating are redrawn.
pub fn random_pair(rng: &mut impl Rng, k: usize, jitter: bool) -> CurvePair {
    loop {
        let down = if rng.random_bool(0.5) {
            logistic_curve(k, rng.random_range(0.3..3.0), rng.random_range(0.6..1.6))
        } else {
            rough_curve(rng, k)
        };
        let base = rng.random_range(0.02..0.6);
        let wave = rng.random_range(0.0..0.5) * base;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let up = lifted(&down, |i| base + wave * (phase + 6.0 * i as f64 / k as f64).sin());
        let up = if jitter { jittered(rng, &up, &down) } else { up };
        if up.is_monotone()
            && dominance(&down, &up, DEFAULT_DOMINANCE_RESOLUTION) == Dominance::Curve1Up
        {
            return CurvePair { up, down };
        }
    }
}

fn jittered(rng: &mut impl Rng, up: &RocCurve, down: &RocCurve) -> RocCurve {
    let d = down.points();
    let k = d.len();
    let points = up
        .points()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let lo = if i == 0 { 0.0 } else { d[i - 1].fpr };
            let hi = if i + 1 == k { 1.0 } else { d[i + 1].fpr };
            let shift = rng.random_range(-1.0..1.0) / 3.0;
            let fpr = if shift < 0.0 {
                q.fpr + shift * (q.fpr - lo)
            } else {
                q.fpr + shift * (hi - q.fpr)
            };
            RocPoint::new(fpr, q.tpr)
        })
        .collect();
    RocCurve::from_points_unchecked(points)
}
