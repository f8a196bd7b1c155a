//! ROC transport: moves every query point of the dominating curve into the
//! L1 ball of radius `eps` around the matching point of the dominated curve.
//!
//! Each index is decided independently from the original inputs:
//!
//! * already within `eps` of its partner: kept;
//! * the up curve crosses the partner's norm boundary: moved to the crossing
//!   on the same side as the original point (`p_right` when its FPR is at
//!   least the partner's, `p_left` otherwise);
//! * on or below the down curve: kept;
//! * otherwise: moved to the top (U) or left (L) vertex of the boundary,
//!   whichever removes the smaller quadrilateral between the original
//!   neighbours and the new point. Ties go to U.
//!
//! The first and last indices use `(0, 0)` and `(1, 1)` as their outer
//! neighbours.

use serde::{Deserialize, Serialize};

use crate::error::{FrocError, Result};
use crate::geometry::{l1_distance, quad_area, CutCursor, CutSearch, NormRhombus};
use crate::roc::{auc, interpolate_vertices, interpolate_anchored_near, RocCurve, RocPoint};
use crate::tolerance::Tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    CutShiftLeft,
    CutShiftRight,
    UpShift,
    LeftShift,
    NoShift,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftDecision {
    pub kind: ShiftKind,
    /// Target before clamping to the unit square.
    pub raw_target: RocPoint,
    pub target: RocPoint,
}

/// Non-fatal findings. Indices are 1-based query positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Diagnostic {
    ClampedTarget { index: usize, raw: RocPoint },
    /// The up curve meets this index's norm boundary more than twice.
    ExcessIntersections { index: usize, count: usize },
    /// `FPR(down[i-1]) <= FPR(up[i]) <= FPR(down[i+1])` fails here.
    SpacingViolated { index: usize },
    /// A kept point is farther than `eps` from its partner.
    GapExceedsEpsilon { index: usize, gap: f64 },
    NonMonotone { indices: Vec<usize> },
    MonotoneRepair { indices: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub eps: f64,
    pub decisions: Vec<ShiftDecision>,
    pub fair_up: RocCurve,
    /// The down curve, unchanged.
    pub fair_down: RocCurve,
    pub diagnostics: Vec<Diagnostic>,
}

impl TransportPlan {
    pub fn k(&self) -> usize {
        self.decisions.len()
    }

    pub fn count(&self, kind: ShiftKind) -> usize {
        self.decisions.iter().filter(|d| d.kind == kind).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportOptions {
    /// Lower fair TPRs to a running minimum from the right when the moved
    /// points are not monotone.
    pub repair_monotone: bool,
    /// Record spacing and multiple-intersection diagnostics. Counting every
    /// boundary crossing costs extra range queries per index.
    pub check_assumptions: bool,
    pub tolerance: Tolerance,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            repair_monotone: false,
            check_assumptions: true,
            tolerance: Tolerance::default(),
        }
    }
}

pub fn fair_roc(roc_up: &RocCurve, roc_down: &RocCurve, eps: f64) -> Result<TransportPlan> {
    fair_roc_with(roc_up, roc_down, eps, &TransportOptions::default())
}

pub fn fair_roc_with(
    roc_up: &RocCurve,
    roc_down: &RocCurve,
    eps: f64,
    opts: &TransportOptions,
) -> Result<TransportPlan> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(FrocError::InvalidEpsilon(eps));
    }
    if roc_up.len() != roc_down.len() {
        return Err(FrocError::LengthMismatch {
            up: roc_up.len(),
            down: roc_down.len(),
        });
    }
    if roc_up.is_empty() {
        return Err(FrocError::EmptyCurve);
    }
    for curve in [roc_up, roc_down] {
        let bad = curve.monotonicity_violations();
        if !bad.is_empty() {
            return Err(FrocError::NonMonotone { indices: bad });
        }
    }

    let tol = opts.tolerance.predicate;
    let up = roc_up.points();
    let down = roc_down.points();
    let k = up.len();
    let search = CutSearch::new(roc_up);
    let mut diagnostics = Vec::new();
    // Consecutive indices query nearby places on both curves.
    let mut cursor = CutCursor::default();
    let mut down_hint = 0;
    let mut under_down = |p: RocPoint| {
        let (tpr, hint) = interpolate_anchored_near(down, p.fpr, down_hint);
        down_hint = hint;
        p.tpr <= tpr + tol
    };

    let mut decisions = Vec::with_capacity(k);
    let mut points = Vec::with_capacity(k);
    let mut bad = Vec::new();
    for i in 0..k {
        let q_up = up[i];
        let q_down = down[i];
        let rhombus = NormRhombus::new(q_down, eps);

        let (kind, raw_target) = if l1_distance(q_up, q_down) <= eps + tol {
            (ShiftKind::NoShift, q_up)
        } else if let Some((p_left, p_right)) = search.extremes_near(&rhombus, tol, &mut cursor) {
            if q_up.fpr >= q_down.fpr {
                (ShiftKind::CutShiftRight, p_right)
            } else {
                (ShiftKind::CutShiftLeft, p_left)
            }
        } else if under_down(q_up) {
            diagnostics.push(Diagnostic::GapExceedsEpsilon {
                index: i + 1,
                gap: l1_distance(q_up, q_down),
            });
            (ShiftKind::NoShift, q_up)
        } else {
            let prev = if i == 0 { RocPoint::ORIGIN } else { up[i - 1] };
            let next = if i + 1 == k { RocPoint::ONE } else { up[i + 1] };
            let area_left = quad_area(next, q_up, prev, rhombus.left);
            let area_up = quad_area(next, q_up, prev, rhombus.up);
            if area_left >= area_up {
                (ShiftKind::UpShift, rhombus.up)
            } else {
                (ShiftKind::LeftShift, rhombus.left)
            }
        };

        let target = raw_target.clamped();
        if target != raw_target {
            diagnostics.push(Diagnostic::ClampedTarget {
                index: i + 1,
                raw: raw_target,
            });
        }
        if points.last().is_some_and(|p: &RocPoint| target.fpr < p.fpr || target.tpr < p.tpr) {
            bad.push(i + 1);
        }
        points.push(target);
        decisions.push(ShiftDecision {
            kind,
            raw_target,
            target,
        });
    }

    if opts.check_assumptions {
        let report = check_assumptions_with(&search, roc_up, roc_down, eps, tol);
        diagnostics.extend(
            report
                .spacing_violations
                .iter()
                .map(|&index| Diagnostic::SpacingViolated { index }),
        );
        diagnostics.extend(
            report
                .excess_intersections
                .iter()
                .map(|&(index, count)| Diagnostic::ExcessIntersections { index, count }),
        );
    }

    if !bad.is_empty() {
        diagnostics.push(Diagnostic::NonMonotone {
            indices: bad.clone(),
        });
        if opts.repair_monotone {
            let mut repaired = Vec::new();
            for i in (0..k.saturating_sub(1)).rev() {
                if points[i].tpr > points[i + 1].tpr {
                    points[i].tpr = points[i + 1].tpr;
                    repaired.push(i + 1);
                }
            }
            repaired.reverse();
            diagnostics.push(Diagnostic::MonotoneRepair { indices: repaired });
        }
    }

    Ok(TransportPlan {
        eps,
        decisions,
        fair_up: RocCurve::from_points_unchecked(points),
        fair_down: roc_down.clone(),
        diagnostics,
    })
}

/// Outcome of checking the spacing and at-most-two-crossings conditions
/// under which the transport is AUC-optimal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// 1-based indices where `FPR(down[i-1]) <= FPR(up[i]) <= FPR(down[i+1])`
    /// fails, with `(0, 0)` and `(1, 1)` standing in past the ends.
    pub spacing_violations: Vec<usize>,
    /// 1-based index and crossing count where the up curve meets the norm
    /// boundary more than twice.
    pub excess_intersections: Vec<(usize, usize)>,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.spacing_violations.is_empty() && self.excess_intersections.is_empty()
    }
}

pub fn check_assumptions(roc_up: &RocCurve, roc_down: &RocCurve, eps: f64) -> AssumptionReport {
    let tol = Tolerance::default().predicate;
    check_assumptions_with(&CutSearch::new(roc_up), roc_up, roc_down, eps, tol)
}

fn check_assumptions_with(
    search: &CutSearch,
    roc_up: &RocCurve,
    roc_down: &RocCurve,
    eps: f64,
    tol: f64,
) -> AssumptionReport {
    let up = roc_up.points();
    let down = roc_down.vertices();
    let mut report = AssumptionReport::default();
    let mut cursor = CutCursor::default();
    for (i, q_up) in up.iter().enumerate() {
        // down[i] in vertex numbering is the point before position i.
        let (lo, hi) = (down[i].fpr, down[i + 2].fpr);
        if q_up.fpr < lo - tol || q_up.fpr > hi + tol {
            report.spacing_violations.push(i + 1);
        }
        let count = search
            .intersections_near(&NormRhombus::new(down[i + 1], eps), tol, &mut cursor)
            .len();
        if count > 2 {
            report.excess_intersections.push((i + 1, count));
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// Largest L1 distance between matched query points.
    pub max_index_gap: f64,
    /// Largest TPR difference between the two polylines on a 1001-point FPR grid.
    pub max_dense_gap: f64,
    pub pass: bool,
}

pub fn verify_fairness(fair_up: &RocCurve, fair_down: &RocCurve, eps: f64) -> FairnessReport {
    let max_index_gap = fair_up
        .points()
        .iter()
        .zip(fair_down.points())
        .map(|(a, b)| l1_distance(*a, *b))
        .fold(0.0, f64::max);
    let (vu, vd) = (fair_up.vertices(), fair_down.vertices());
    let max_dense_gap = (0..1001)
        .map(|j| {
            let x = j as f64 / 1000.0;
            (interpolate_vertices(&vu, x) - interpolate_vertices(&vd, x)).abs()
        })
        .fold(0.0, f64::max);
    FairnessReport {
        max_index_gap,
        max_dense_gap,
        pass: max_index_gap <= eps + Tolerance::default().assertion,
    }
}

/// AUC given up by the transport: `auc(original_up) - auc(fair_up)`.
pub fn auc_loss(plan: &TransportPlan, original_up: &RocCurve) -> f64 {
    auc(original_up) - auc(&plan.fair_up)
}
