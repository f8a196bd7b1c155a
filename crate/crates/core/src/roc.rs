//! Group-conditional ROC curves under the k-threshold query model.
//!
//! A [`RocCurve`] stores its query points in order of nondecreasing false
//! positive rate, which is decreasing threshold: position `i` (1-based) of a
//! curve built on a [`QueryGrid`] of size `k` holds the point for threshold
//! `t_{k+1-i}`. The anchors `(0, 0)` and `(1, 1)` are implicit; every routine
//! that needs the full polyline goes through [`RocCurve::vertices`] or
//! [`RocCurve::pla_vertices`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FrocError, Result};
use crate::tolerance::PREDICATE_TOL;

/// An operating point in ROC space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

impl RocPoint {
    pub const ORIGIN: RocPoint = RocPoint { fpr: 0.0, tpr: 0.0 };
    pub const ONE: RocPoint = RocPoint { fpr: 1.0, tpr: 1.0 };

    pub const fn new(fpr: f64, tpr: f64) -> Self {
        Self { fpr, tpr }
    }

    pub fn try_new(fpr: f64, tpr: f64) -> Result<Self> {
        let p = Self { fpr, tpr };
        if p.in_unit_square() {
            Ok(p)
        } else {
            Err(FrocError::PointOutOfRange { fpr, tpr })
        }
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.fpr) && (0.0..=1.0).contains(&self.tpr)
    }

    pub fn clamped(&self) -> Self {
        Self {
            fpr: self.fpr.clamp(0.0, 1.0),
            tpr: self.tpr.clamp(0.0, 1.0),
        }
    }
}

impl fmt::Display for RocPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.fpr, self.tpr)
    }
}

/// Ordered query points of one ROC curve.
///
/// Curves built through [`RocCurve::new`] are validated: every point is inside
/// the unit square and both coordinates are nondecreasing. Transported curves
/// may legitimately break monotonicity, so [`RocCurve::from_points_unchecked`]
/// exists for them; [`RocCurve::monotonicity_violations`] reports the damage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn new(points: Vec<RocPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(FrocError::EmptyCurve);
        }
        if let Some(p) = points.iter().find(|p| !p.in_unit_square()) {
            return Err(FrocError::PointOutOfRange {
                fpr: p.fpr,
                tpr: p.tpr,
            });
        }
        let curve = Self { points };
        let bad = curve.monotonicity_violations();
        if bad.is_empty() {
            Ok(curve)
        } else {
            Err(FrocError::NonMonotone { indices: bad })
        }
    }

    pub fn from_points_unchecked(points: Vec<RocPoint>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Positions `i` (0-based) where point `i` decreases in either coordinate
    /// relative to point `i - 1`.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        monotonicity_violations(&self.points)
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations().is_empty()
    }

    /// Query points with the `(0, 0)` and `(1, 1)` anchors attached.
    pub fn vertices(&self) -> Vec<RocPoint> {
        let mut v = Vec::with_capacity(self.points.len() + 2);
        v.push(RocPoint::ORIGIN);
        v.extend_from_slice(&self.points);
        v.push(RocPoint::ONE);
        v
    }

    /// Anchored vertices with consecutive duplicates removed. Every
    /// consecutive pair is a segment of positive length.
    pub fn pla_vertices(&self) -> Vec<RocPoint> {
        let mut v = self.vertices();
        v.dedup();
        v
    }

    /// Segments of the piecewise-linear approximation, anchors included.
    pub fn segments(&self) -> Vec<crate::geometry::Segment> {
        self.pla_vertices()
            .windows(2)
            .map(|w| crate::geometry::Segment::new(w[0], w[1]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Group {
    Zero,
    One,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::Zero, Group::One];

    pub fn index(self) -> usize {
        match self {
            Group::Zero => 0,
            Group::One => 1,
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::Zero => Group::One,
            Group::One => Group::Zero,
        }
    }
}

impl From<Group> for u8 {
    fn from(g: Group) -> u8 {
        g.index() as u8
    }
}

impl TryFrom<u8> for Group {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Group::Zero),
            1 => Ok(Group::One),
            other => Err(format!("group must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub score: f64,
    pub group: Group,
    pub label: bool,
}

/// Min-max mapping from raw model scores onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization { min: 0.0, max: 1.0 };

    pub fn fit(scores: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut it = scores.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s)));
        Some(Self { min, max })
    }

    /// Constant-score data maps to 0.5.
    pub fn apply(&self, raw: f64) -> f64 {
        if self.max > self.min {
            ((raw - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }
}

/// Scored, labelled rows of both protected groups. Scores are already
/// normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedScores {
    rows: Vec<ScoreRow>,
    normalization: Normalization,
}

impl GroupedScores {
    /// Takes rows whose scores are already in `[0, 1]`.
    pub fn new(rows: Vec<ScoreRow>, normalization: Normalization) -> Result<Self> {
        if rows.is_empty() {
            return Err(FrocError::EmptyDataset);
        }
        if let Some(r) = rows.iter().find(|r| !(0.0..=1.0).contains(&r.score)) {
            return Err(FrocError::InvalidInput(format!(
                "normalized score {} outside [0, 1]",
                r.score
            )));
        }
        let data = Self {
            rows,
            normalization,
        };
        for group in Group::BOTH {
            for label in [true, false] {
                if !data.rows.iter().any(|r| r.group == group && r.label == label) {
                    return Err(FrocError::MissingCell { group, label });
                }
            }
        }
        Ok(data)
    }

    /// Min-max normalizes raw scores and validates the result.
    pub fn from_raw(rows: Vec<ScoreRow>) -> Result<Self> {
        let normalization =
            Normalization::fit(rows.iter().map(|r| r.score)).ok_or(FrocError::EmptyDataset)?;
        let rows = rows
            .into_iter()
            .map(|r| ScoreRow {
                score: normalization.apply(r.score),
                ..r
            })
            .collect();
        Self::new(rows, normalization)
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted scores of one `(group, label)` cell.
    pub fn sorted_scores(&self, group: Group, label: bool) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.group == group && r.label == label)
            .map(|r| r.score)
            .collect();
        s.sort_by(f64::total_cmp);
        s
    }
}

/// Equidistant thresholds `t_i = i / k`, `i = 1..=k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryGrid {
    k: usize,
}

impl QueryGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            Err(FrocError::InvalidK)
        } else {
            Ok(Self { k })
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `t_i` for `i` in `1..=k`.
    pub fn threshold(&self, i: usize) -> f64 {
        i as f64 / self.k as f64
    }

    pub fn thresholds(&self) -> Vec<f64> {
        (1..=self.k).map(|i| self.threshold(i)).collect()
    }

    /// Threshold of curve position `pos` (1-based, fpr-ascending order).
    pub fn threshold_at_position(&self, pos: usize) -> f64 {
        self.threshold(self.k + 1 - pos)
    }
}

/// Upper bounds on `|dTPR/dt|` and `|dFPR/dt|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeBounds {
    pub u_t: f64,
    pub u_f: f64,
}

impl SlopeBounds {
    /// Largest finite-difference slope between consecutive query points of a
    /// curve sampled on `grid`. This is an estimate, not a bound.
    pub fn estimate(curve: &RocCurve, grid: &QueryGrid) -> Self {
        let step = 1.0 / grid.k() as f64;
        let (mut u_t, mut u_f) = (0.0_f64, 0.0_f64);
        for w in curve.points().windows(2) {
            u_t = u_t.max((w[1].tpr - w[0].tpr).abs() / step);
            u_f = u_f.max((w[1].fpr - w[0].fpr).abs() / step);
        }
        Self { u_t, u_f }
    }
}

/// Samples group `group`'s ROC at every threshold of `grid` using the
/// `score >= t` acceptance rule.
pub fn empirical_roc(data: &GroupedScores, group: Group, grid: &QueryGrid) -> Result<RocCurve> {
    let pos = data.sorted_scores(group, true);
    let neg = data.sorted_scores(group, false);
    if pos.is_empty() {
        return Err(FrocError::MissingCell { group, label: true });
    }
    if neg.is_empty() {
        return Err(FrocError::MissingCell {
            group,
            label: false,
        });
    }
    let accepted = |sorted: &[f64], t: f64| {
        let rejected = sorted.partition_point(|&s| s < t);
        (sorted.len() - rejected) as f64 / sorted.len() as f64
    };
    let points = (1..=grid.k())
        .map(|pos_idx| {
            let t = grid.threshold_at_position(pos_idx);
            RocPoint::new(accepted(&neg, t), accepted(&pos, t))
        })
        .collect();
    RocCurve::new(points)
}

/// Canonical piecewise-linear form: consecutive duplicate points are dropped
/// and monotonicity is enforced.
pub fn pla(curve: &RocCurve) -> Result<RocCurve> {
    let bad = curve.monotonicity_violations();
    if !bad.is_empty() {
        return Err(FrocError::NonMonotone { indices: bad });
    }
    let mut pts: Vec<RocPoint> = curve.points().to_vec();
    pts.dedup();
    RocCurve::new(pts)
}

/// TPR of the piecewise-linear curve at `fpr`; on vertical runs the highest
/// TPR is returned.
pub fn interpolate(curve: &RocCurve, fpr: f64) -> f64 {
    interpolate_vertices(&curve.vertices(), fpr)
}

/// Positions `i` (from 1) where point `i` decreases in a coordinate from
/// point `i - 1`.
pub(crate) fn monotonicity_violations(points: &[RocPoint]) -> Vec<usize> {
    points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].fpr < w[0].fpr || w[1].tpr < w[0].tpr)
        .map(|(i, _)| i + 1)
        .collect()
}

pub(crate) fn interpolate_vertices(v: &[RocPoint], fpr: f64) -> f64 {
    let x = fpr.clamp(0.0, 1.0);
    interpolate_at(v.len(), |i| v[i], x, v.partition_point(|p| p.fpr <= x))
}

/// As `interpolate_vertices` over the anchored vertices of `points`, without
/// copying them, searching outward from vertex `hint`. Also returns a hint
/// for the next nearby lookup.
pub(crate) fn interpolate_anchored_near(points: &[RocPoint], fpr: f64, hint: usize) -> (f64, usize) {
    let n = points.len() + 2;
    let v = |i: usize| match i {
        0 => RocPoint::ORIGIN,
        i if i + 1 == n => RocPoint::ONE,
        i => points[i - 1],
    };
    let x = fpr.clamp(0.0, 1.0);
    let n_le = partition_point_near(n, hint, |i| v(i).fpr <= x);
    (interpolate_at(n, v, x, n_le), n_le)
}

/// Linear interpolation at `x` given the count `n_le` of the `n` vertices
/// with fpr at most `x`.
fn interpolate_at(n: usize, v: impl Fn(usize) -> RocPoint, x: f64, n_le: usize) -> f64 {
    let j = n_le.saturating_sub(1);
    if j + 1 >= n || v(j).fpr == x {
        return v(j).tpr;
    }
    let (a, b) = (v(j), v(j + 1));
    a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr)
}

/// First index in `0..n` where `pred` fails, for `pred` true then false,
/// found by galloping outward from `hint` in O(log |answer - hint|) probes.
pub(crate) fn partition_point_near(n: usize, hint: usize, pred: impl Fn(usize) -> bool) -> usize {
    let h = hint.min(n);
    let (lo, hi) = if h < n && pred(h) {
        let (mut lo, mut step) = (h + 1, 1);
        while lo + step - 1 < n && pred(lo + step - 1) {
            lo += step;
            step *= 2;
        }
        (lo, (lo + step - 1).min(n))
    } else {
        let (mut hi, mut step) = (h, 1);
        while hi >= step && !pred(hi - step) {
            hi -= step;
            step *= 2;
        }
        (if hi >= step { hi - step + 1 } else { 0 }, hi)
    };
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Trapezoid-rule area under the anchored polyline.
pub fn auc(curve: &RocCurve) -> f64 {
    trapezoid_area(&curve.vertices())
}

pub(crate) fn trapezoid_area(v: &[RocPoint]) -> f64 {
    v.windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) * 0.5)
        .sum()
}

/// Worst-case AUC lost by linear interpolation between `k` equidistant
/// thresholds when the rates change at most `u_t`, `u_f` per unit threshold.
pub fn pla_loss_bound(bounds: SlopeBounds, k: usize) -> f64 {
    bounds.u_t * bounds.u_f / (2.0 * k as f64)
}

/// Which of two curves lies above the other.
#[derive(Clone, Debug, PartialEq)]
pub enum Dominance {
    /// `curve0 >= curve1` everywhere; also returned for identical curves.
    Curve0Up,
    Curve1Up,
    /// Approximate FPR values where the sign of `tpr1 - tpr0` flips.
    Intersecting(Vec<f64>),
}

pub const DEFAULT_DOMINANCE_RESOLUTION: usize = 1001;

pub fn dominance(curve0: &RocCurve, curve1: &RocCurve, grid_resolution: usize) -> Dominance {
    let n = grid_resolution.max(2);
    let (v0, v1) = (curve0.vertices(), curve1.vertices());
    let diffs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let x = j as f64 / (n - 1) as f64;
            (x, interpolate_vertices(&v1, x) - interpolate_vertices(&v0, x))
        })
        .collect();

    if diffs.iter().all(|&(_, d)| d <= PREDICATE_TOL) {
        return Dominance::Curve0Up;
    }
    if diffs.iter().all(|&(_, d)| d >= -PREDICATE_TOL) {
        return Dominance::Curve1Up;
    }

    let mut crossings = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for &(x, d) in &diffs {
        if d.abs() <= PREDICATE_TOL {
            continue;
        }
        if let Some((xa, da)) = last {
            if da.signum() != d.signum() {
                crossings.push(xa + (x - xa) * da / (da - d));
            }
        }
        last = Some((x, d));
    }
    Dominance::Intersecting(crossings)
}
