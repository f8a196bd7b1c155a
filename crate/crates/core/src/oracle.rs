//! Exhaustive dynamic-programming search for the best fair curve on small
//! instances.
//!
//! Each query position gets a finite set of achievable points within `eps`
//! of the down curve; the DP picks one per position so that the polyline
//! `(0,0), c_1, ..., c_k, (1,1)` has nondecreasing fpr and maximum area.

use serde::{Deserialize, Serialize};

use crate::error::{FrocError, Result};
use crate::geometry::{boundary_intersections, l1_distance, NormRhombus};
use crate::roc::{auc, interpolate_vertices, RocCurve, RocPoint};
use crate::tolerance::{ASSERT_TOL, PREDICATE_TOL};
use crate::transport::{check_assumptions, fair_roc, AssumptionReport};

pub const MAX_ORACLE_K: usize = 25;
pub const MIN_DELTA: f64 = 1e-4;

/// Candidate fair points per curve position.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub points: Vec<Vec<RocPoint>>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }
}

/// Points on the rhombus boundary, each edge split into `ceil(2 eps / delta)`
/// steps.
fn ring(rh: &NormRhombus, delta: f64, out: &mut Vec<RocPoint>) {
    let steps = ((2.0 * rh.eps / delta).ceil() as usize).max(1);
    for e in rh.edges() {
        let (a, b) = (e.a, e.b);
        for j in 0..steps {
            let t = j as f64 / steps as f64;
            out.push(RocPoint {
                fpr: a.fpr + t * (b.fpr - a.fpr),
                tpr: a.tpr + t * (b.tpr - a.tpr),
            });
        }
    }
}

/// Builds the candidate sets: the discretized boundary, every point where
/// `roc_up` crosses it, the clamped U and L vertices and the up point itself
/// (plus inner rings unless `boundary_only`). Every candidate is inside the
/// unit square, within `eps` of its down point and on or below `roc_up`.
pub fn candidate_set(
    roc_up: &RocCurve,
    roc_down: &RocCurve,
    eps: f64,
    delta: f64,
    boundary_only: bool,
) -> CandidateSet {
    let up_vertices = roc_up.vertices();
    let points = roc_down
        .points()
        .iter()
        .zip(roc_up.points())
        .map(|(&center, &q_up)| {
            let rh = NormRhombus::new(center, eps);
            let mut raw = Vec::new();
            ring(&rh, delta, &mut raw);
            // Every crossing, not just the extremes: feasible boundary arcs
            // can be narrower than the ring spacing.
            raw.extend(boundary_intersections(roc_up, &rh, PREDICATE_TOL));
            raw.extend([rh.up.clamped(), rh.left.clamped(), q_up]);
            if !boundary_only {
                let rings = (eps / delta).ceil() as usize;
                raw.push(center);
                for r in 1..rings {
                    ring(&NormRhombus::new(center, eps * r as f64 / rings as f64), delta, &mut raw);
                }
            }
            let mut kept: Vec<RocPoint> = raw
                .into_iter()
                .filter(|p| {
                    p.in_unit_square()
                        && l1_distance(*p, center) <= eps + PREDICATE_TOL
                        && p.tpr <= interpolate_vertices(&up_vertices, p.fpr) + ASSERT_TOL
                })
                .collect();
            kept.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
            kept.dedup();
            kept
        })
        .collect();
    CandidateSet { points }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub best_auc: f64,
    pub best_points: Vec<RocPoint>,
    pub candidates: usize,
}

fn trapezoid(a: RocPoint, b: RocPoint) -> f64 {
    (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5
}

/// Maximum-area fair curve over the candidate sets.
pub fn dp_optimal(
    roc_up: &RocCurve,
    roc_down: &RocCurve,
    eps: f64,
    delta: f64,
    boundary_only: bool,
) -> Result<OracleSolution> {
    let k = roc_down.len();
    if roc_up.len() != k {
        return Err(FrocError::LengthMismatch {
            up: roc_up.len(),
            down: k,
        });
    }
    if k > MAX_ORACLE_K {
        return Err(FrocError::OracleTooLarge {
            k,
            max: MAX_ORACLE_K,
        });
    }
    if !(delta >= MIN_DELTA) || !delta.is_finite() {
        return Err(FrocError::InvalidDelta {
            delta,
            min: MIN_DELTA,
        });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(FrocError::InvalidEpsilon(eps));
    }
    let cands = candidate_set(roc_up, roc_down, eps, delta, boundary_only);
    dp_over(&cands)
}

/// DP over explicit candidate sets, each sorted by fpr.
pub fn dp_over(cands: &CandidateSet) -> Result<OracleSolution> {
    let layers = &cands.points;
    if let Some(i) = layers.iter().position(Vec::is_empty) {
        return Err(FrocError::Infeasible { index: i + 1 });
    }
    let mut value: Vec<f64> = layers[0]
        .iter()
        .map(|&c| trapezoid(RocPoint::ORIGIN, c))
        .collect();
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    parents.push(vec![usize::MAX; layers[0].len()]);

    for (i, layer) in layers.iter().enumerate().skip(1) {
        let prev = &layers[i - 1];
        let mut next = vec![f64::NEG_INFINITY; layer.len()];
        let mut parent = vec![usize::MAX; layer.len()];
        for (ci, &c) in layer.iter().enumerate() {
            for (bi, &b) in prev.iter().enumerate() {
                if b.fpr > c.fpr {
                    break;
                }
                let v = value[bi] + trapezoid(b, c);
                if v > next[ci] {
                    next[ci] = v;
                    parent[ci] = bi;
                }
            }
        }
        if next.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(FrocError::Infeasible { index: i + 1 });
        }
        value = next;
        parents.push(parent);
    }

    let last = layers.len() - 1;
    let (mut at, best_auc) = layers[last]
        .iter()
        .zip(&value)
        .enumerate()
        .map(|(ci, (&c, &v))| (ci, v + trapezoid(c, RocPoint::ONE)))
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

    let mut best_points = vec![RocPoint::ORIGIN; layers.len()];
    for i in (0..layers.len()).rev() {
        best_points[i] = layers[i][at];
        at = parents[i][at];
    }
    Ok(OracleSolution {
        best_auc,
        best_points,
        candidates: cands.total(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub eps: f64,
    pub delta: f64,
    pub froc_auc: f64,
    pub oracle_auc: f64,
    /// `oracle_auc - froc_auc`.
    pub gap: f64,
    pub assumptions_hold: bool,
    pub assumptions: AssumptionReport,
    pub oracle_points: Vec<RocPoint>,
}

/// Runs both the transport and the oracle on one instance.
pub fn optimality_report(
    roc_up: &RocCurve,
    roc_down: &RocCurve,
    eps: f64,
    delta: f64,
    boundary_only: bool,
) -> Result<OptimalityReport> {
    let plan = fair_roc(roc_up, roc_down, eps)?;
    let froc_auc = auc(&plan.fair_up);
    let sol = dp_optimal(roc_up, roc_down, eps, delta, boundary_only)?;
    let assumptions = check_assumptions(roc_up, roc_down, eps);
    Ok(OptimalityReport {
        eps,
        delta,
        froc_auc,
        oracle_auc: sol.best_auc,
        gap: sol.best_auc - froc_auc,
        assumptions_hold: assumptions.holds(),
        assumptions,
        oracle_points: sol.best_points,
    })
}
