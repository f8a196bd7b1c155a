//! Randomized classifiers realizing transported ROC points.
//!
//! Any point inside the triangle spanned by three achievable operating points
//! is achievable by picking one of the three underlying classifiers at random
//! per sample with the point's barycentric weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FrocError, Result};
use crate::geometry::{l1_distance, Segment};
use crate::roc::{Group, Normalization, QueryGrid, RocCurve, RocPoint};
use crate::tolerance::{ASSERT_TOL, PREDICATE_TOL};
use crate::transport::TransportPlan;

/// A deterministic classifier whose operating point is a vertex of ROC space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VertexClassifier {
    /// Operating point `(0, 0)`.
    AlwaysReject,
    /// Operating point `(1, 1)`.
    AlwaysAccept,
    /// Base score thresholded at curve position `index` (1-based) of `group`.
    Threshold { index: usize, group: Group },
}

/// Three vertex classifiers picked with fixed probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub vertices: [VertexClassifier; 3],
    pub probs: [f64; 3],
    /// Operating point the mixture realizes.
    pub target: RocPoint,
}

impl Mixture {
    pub fn trivial(vertex: VertexClassifier, target: RocPoint) -> Self {
        Self {
            vertices: [vertex, VertexClassifier::AlwaysReject, VertexClassifier::AlwaysAccept],
            probs: [1.0, 0.0, 0.0],
            target,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.probs.iter().any(|&p| p == 1.0)
    }
}

/// Barycentric weights of `target` in triangle `(qa, qb, qc)`, from solving
/// `p_a (qa - qc) + p_b (qb - qc) = target - qc` by Cramer's rule.
pub fn convex_mix(target: RocPoint, qa: RocPoint, qb: RocPoint, qc: RocPoint) -> Result<[f64; 3]> {
    let a1 = qa.tpr - qc.tpr;
    let a2 = qa.fpr - qc.fpr;
    let b1 = qb.tpr - qc.tpr;
    let b2 = qb.fpr - qc.fpr;
    let c1 = target.tpr - qc.tpr;
    let c2 = target.fpr - qc.fpr;
    let det = a1 * b2 - a2 * b1;
    if det.abs() <= PREDICATE_TOL {
        return Err(FrocError::DegenerateTriangle { det });
    }
    let p_a = (c1 * b2 - c2 * b1) / det;
    let p_b = (a1 * c2 - a2 * c1) / det;
    let p_c = 1.0 - p_a - p_b;
    for (name, value) in [("p_a", p_a), ("p_b", p_b), ("p_c", p_c)] {
        if value < -ASSERT_TOL {
            return Err(FrocError::OutsideTriangle {
                coordinate: name,
                value,
            });
        }
    }
    let mut probs = [p_a.clamp(0.0, 1.0), p_b.clamp(0.0, 1.0), p_c.clamp(0.0, 1.0)];
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Per-group, per-threshold mixtures plus what is needed to evaluate them on
/// raw scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizedClassifier {
    pub grid: QueryGrid,
    pub normalization: Normalization,
    pub up_group: Group,
    /// Base ROC curves indexed by group.
    pub base: [RocCurve; 2],
    /// Mixtures indexed by group, then by curve position.
    pub mixtures: [Vec<Mixture>; 2],
}

impl RandomizedClassifier {
    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn vertex_point(&self, v: VertexClassifier) -> RocPoint {
        match v {
            VertexClassifier::AlwaysReject => RocPoint::ORIGIN,
            VertexClassifier::AlwaysAccept => RocPoint::ONE,
            VertexClassifier::Threshold { index, group } => {
                self.base[group.index()].points()[index - 1]
            }
        }
    }

    /// Weighted sum of a mixture's vertex operating points.
    pub fn recompose(&self, m: &Mixture) -> RocPoint {
        let mut out = RocPoint::ORIGIN;
        for (v, p) in m.vertices.iter().zip(m.probs) {
            let q = self.vertex_point(*v);
            out.fpr += p * q.fpr;
            out.tpr += p * q.tpr;
        }
        out
    }

    pub fn mixture(&self, group: Group, index: usize) -> Result<&Mixture> {
        self.mixtures[group.index()]
            .get(index.wrapping_sub(1))
            .ok_or(FrocError::IndexOutOfRange {
                index,
                k: self.k(),
            })
    }
}

/// Builds mixtures for every fair point. The down group keeps its base
/// classifier; each up-group point is realized from, in order of preference:
/// its own base classifier, the two endpoints of the up-curve segment it lies
/// on, the triangle `(0,0)`, `(1,1)`, `Q_j` with the smallest containing `j`,
/// a fan triangle `(0,0)`, `Q_j`, `Q_{j+1}`, or any triangle of the vertices'
/// convex hull. Targets outside that hull cannot be realized by randomizing
/// these classifiers and give `NotAchievable`, even when they lie under the
/// up curve.
pub fn construct_classifier(
    plan: &TransportPlan,
    base_up: &RocCurve,
    base_down: &RocCurve,
    up_group: Group,
    grid: QueryGrid,
    normalization: Normalization,
) -> Result<RandomizedClassifier> {
    let k = grid.k();
    for len in [plan.fair_up.len(), base_up.len(), base_down.len()] {
        if len != k {
            return Err(FrocError::LengthMismatch { up: len, down: k });
        }
    }
    let down_group = up_group.other();
    let down_mix: Vec<Mixture> = base_down
        .points()
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            Mixture::trivial(
                VertexClassifier::Threshold {
                    index: i + 1,
                    group: down_group,
                },
                q,
            )
        })
        .collect();

    let vertices = PlaVertices::new(base_up, up_group);
    let up_mix = plan
        .fair_up
        .points()
        .iter()
        .enumerate()
        .map(|(i, &target)| mix_for_target(i + 1, target, base_up, &vertices, up_group))
        .collect::<Result<Vec<_>>>()?;

    let mut mixtures = [Vec::new(), Vec::new()];
    mixtures[up_group.index()] = up_mix;
    mixtures[down_group.index()] = down_mix;
    let mut base = [base_up.clone(), base_down.clone()];
    if up_group == Group::One {
        base.swap(0, 1);
    }
    let rc = RandomizedClassifier {
        grid,
        normalization,
        up_group,
        base,
        mixtures,
    };

    for g in Group::BOTH {
        for (i, m) in rc.mixtures[g.index()].iter().enumerate() {
            let r = rc.recompose(m);
            let err = (r.fpr - m.target.fpr).abs().max((r.tpr - m.target.tpr).abs());
            if err > ASSERT_TOL {
                return Err(FrocError::Recomposition {
                    index: i + 1,
                    fpr: r.fpr,
                    tpr: r.tpr,
                    error: err,
                });
            }
        }
    }
    Ok(rc)
}

/// Deduplicated anchored vertices of the base up curve, each tagged with the
/// classifier that realizes it.
struct PlaVertices {
    points: Vec<RocPoint>,
    classifiers: Vec<VertexClassifier>,
}

impl PlaVertices {
    fn new(curve: &RocCurve, group: Group) -> Self {
        let mut points = vec![RocPoint::ORIGIN];
        let mut classifiers = vec![VertexClassifier::AlwaysReject];
        for (i, &q) in curve.points().iter().enumerate() {
            if Some(&q) != points.last() {
                points.push(q);
                classifiers.push(VertexClassifier::Threshold { index: i + 1, group });
            }
        }
        if points.last() != Some(&RocPoint::ONE) {
            points.push(RocPoint::ONE);
            classifiers.push(VertexClassifier::AlwaysAccept);
        }
        Self {
            points,
            classifiers,
        }
    }
}

fn mix_for_target(
    index: usize,
    target: RocPoint,
    base_up: &RocCurve,
    vertices: &PlaVertices,
    group: Group,
) -> Result<Mixture> {
    let own = base_up.points()[index - 1];
    if l1_distance(own, target) <= PREDICATE_TOL {
        return Ok(Mixture::trivial(VertexClassifier::Threshold { index, group }, target));
    }

    let pts = &vertices.points;
    let cls = &vertices.classifiers;

    // On a segment of the up curve: two-point mixture.
    for j in 0..pts.len() - 1 {
        let seg = Segment::new(pts[j], pts[j + 1]);
        if seg.distance_to(target) <= ASSERT_TOL {
            let third = if cls[j] == VertexClassifier::AlwaysReject {
                VertexClassifier::AlwaysAccept
            } else {
                VertexClassifier::AlwaysReject
            };
            let third_point = if third == VertexClassifier::AlwaysReject {
                RocPoint::ORIGIN
            } else {
                RocPoint::ONE
            };
            let probs = match convex_mix(target, pts[j], pts[j + 1], third_point) {
                Ok(p) => p,
                Err(_) => {
                    let t = seg.project(target);
                    [1.0 - t, t, 0.0]
                }
            };
            return Ok(Mixture {
                vertices: [cls[j], cls[j + 1], third],
                probs,
                target,
            });
        }
    }

    // Strictly inside: triangle (0,0), (1,1), Q_j with the smallest j.
    for j in 1..pts.len() - 1 {
        if let Ok(probs) = convex_mix(target, RocPoint::ORIGIN, RocPoint::ONE, pts[j]) {
            return Ok(Mixture {
                vertices: [VertexClassifier::AlwaysReject, VertexClassifier::AlwaysAccept, cls[j]],
                probs,
                target,
            });
        }
    }

    // Points between two adjacent vertices that no single diagonal triangle
    // covers lie in some fan triangle from the origin.
    for j in 1..pts.len() - 1 {
        if let Ok(probs) = convex_mix(target, pts[j], pts[j + 1], RocPoint::ORIGIN) {
            return Ok(Mixture {
                vertices: [cls[j], cls[j + 1], VertexClassifier::AlwaysReject],
                probs,
                target,
            });
        }
    }

    // Anything else reachable lies in the convex hull of the vertices; fan
    // its triangulation from the first hull vertex.
    let hull = convex_hull(pts);
    for w in hull.windows(2).skip(1) {
        let (a, b, c) = (hull[0], w[0], w[1]);
        if let Ok(probs) = convex_mix(target, pts[a], pts[b], pts[c]) {
            return Ok(Mixture {
                vertices: [cls[a], cls[b], cls[c]],
                probs,
                target,
            });
        }
    }

    Err(FrocError::NotAchievable { index, group })
}

/// Indices of the convex hull of `pts` (sorted by fpr, then tpr) in
/// counterclockwise order, collinear points dropped.
fn convex_hull(pts: &[RocPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].fpr.total_cmp(&pts[b].fpr).then(pts[a].tpr.total_cmp(&pts[b].tpr)));
    let turn = |o: usize, a: usize, b: usize| {
        (pts[a].fpr - pts[o].fpr) * (pts[b].tpr - pts[o].tpr)
            - (pts[a].tpr - pts[o].tpr) * (pts[b].fpr - pts[o].fpr)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in [order.clone(), order.into_iter().rev().collect()] {
        let base = hull.len();
        for i in pass {
            while hull.len() >= base + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Uniform draw in `[0, 1)` determined by `(seed, sample_id, group, index)`.
fn draw(seed: u64, sample_id: u64, group: Group, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_id);
    // Each f64 consumes two 32-bit words.
    rng.set_word_pos(4 * index as u128 + 2 * group.index() as u128);
    rng.random()
}

/// Evaluates one vertex classifier on a score already normalized to `[0, 1]`.
pub fn evaluate_vertex(rc: &RandomizedClassifier, vertex: VertexClassifier, score: f64) -> bool {
    match vertex {
        VertexClassifier::AlwaysReject => false,
        VertexClassifier::AlwaysAccept => true,
        VertexClassifier::Threshold { index, .. } => score >= rc.grid.threshold_at_position(index),
    }
}

/// Randomized decision for one sample at curve position `index` (1-based).
/// The random choice depends only on `(rng_seed, sample_id, group, index)`.
pub fn predict(
    rc: &RandomizedClassifier,
    raw_score: f64,
    group: Group,
    index: usize,
    rng_seed: u64,
    sample_id: u64,
) -> Result<bool> {
    let score = rc.normalization.apply(raw_score);
    predict_normalized(rc, score, group, index, rng_seed, sample_id)
}

/// [`predict`] for a score that is already normalized.
pub fn predict_normalized(
    rc: &RandomizedClassifier,
    score: f64,
    group: Group,
    index: usize,
    rng_seed: u64,
    sample_id: u64,
) -> Result<bool> {
    let m = rc.mixture(group, index)?;
    let chosen = if let Some(pos) = m.probs.iter().position(|&p| p == 1.0) {
        m.vertices[pos]
    } else {
        let u = draw(rng_seed, sample_id, group, index);
        if u < m.probs[0] {
            m.vertices[0]
        } else if u < m.probs[0] + m.probs[1] {
            m.vertices[1]
        } else {
            m.vertices[2]
        }
    };
    Ok(evaluate_vertex(rc, chosen, score))
}
