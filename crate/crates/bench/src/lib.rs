//! Shared inputs for the froc-core benchmarks.

use froc_core::data_io::{generate_synthetic, LogisticCell, SyntheticSpec};
use froc_core::instances::{lifted, logistic_curve};
use froc_core::{GroupedScores, RocCurve};

/// A smooth dominating pair of length `k` whose gap exceeds typical radii at
/// most indices, so every transport rule gets exercised. Returns `(up, down)`.
pub fn smooth_pair(k: usize) -> (RocCurve, RocCurve) {
    let down = logistic_curve(k, 1.2, 1.0);
    let up = lifted(&down, |i| 0.15 + 0.05 * (6.0 * i as f64 / k as f64).sin());
    (up, down)
}

/// Synthetic scores with `n` rows per (group, label) cell; group 1 is less
/// separable than group 0.
pub fn synthetic_scores(n: usize) -> GroupedScores {
    let cell = |location, scale| LogisticCell {
        location,
        scale,
        count: n,
    };
    let spec = SyntheticSpec {
        cells: [[cell(0.35, 0.08), cell(0.65, 0.08)], [cell(0.4, 0.1), cell(0.6, 0.1)]],
        seed: 7,
    };
    generate_synthetic(&spec).expect("valid spec").0
}
