//! L1 norm-boundary geometry in ROC space.
//!
//! The norm boundary around a point `c` is the rhombus `|x - c.fpr| +
//! |y - c.tpr| = eps` with vertices U (top), R, D, L listed clockwise.
//! Intersections with a curve are computed edge by edge as exact parametric
//! segment-segment intersections.

use std::ops::Range;

use crate::error::{FrocError, Result};
use crate::roc::{interpolate_vertices, partition_point_near, RocCurve, RocPoint};
use crate::tolerance::{ASSERT_TOL, PREDICATE_TOL};

pub fn l1_distance(p: RocPoint, q: RocPoint) -> f64 {
    (p.fpr - q.fpr).abs() + (p.tpr - q.tpr).abs()
}

fn l2_distance(p: RocPoint, q: RocPoint) -> f64 {
    (p.fpr - q.fpr).hypot(p.tpr - q.tpr)
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: RocPoint,
    pub b: RocPoint,
}

impl Segment {
    pub fn new(a: RocPoint, b: RocPoint) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        l2_distance(self.a, self.b)
    }

    pub fn point_at(&self, t: f64) -> RocPoint {
        RocPoint::new(
            self.a.fpr + (self.b.fpr - self.a.fpr) * t,
            self.a.tpr + (self.b.tpr - self.a.tpr) * t,
        )
    }

    /// Parameter of the closest point on the segment to `p`, in `[0, 1]`.
    pub fn project(&self, p: RocPoint) -> f64 {
        let (rx, ry) = (self.b.fpr - self.a.fpr, self.b.tpr - self.a.tpr);
        let len2 = rx * rx + ry * ry;
        if len2 == 0.0 {
            return 0.0;
        }
        (((p.fpr - self.a.fpr) * rx + (p.tpr - self.a.tpr) * ry) / len2).clamp(0.0, 1.0)
    }

    /// Euclidean distance from `p` to the segment.
    pub fn distance_to(&self, p: RocPoint) -> f64 {
        l2_distance(self.point_at(self.project(p)), p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Hit {
    None,
    One(RocPoint),
    Two(RocPoint, RocPoint),
}

/// Intersection of `s` with `e`, allowing `tol` of slack at the endpoints.
/// Collinear overlaps are reported by their two extreme points.
fn intersect(s: &Segment, e: &Segment, tol: f64) -> Hit {
    let (rx, ry) = (s.b.fpr - s.a.fpr, s.b.tpr - s.a.tpr);
    let (qx, qy) = (e.b.fpr - e.a.fpr, e.b.tpr - e.a.tpr);
    let (wx, wy) = (e.a.fpr - s.a.fpr, e.a.tpr - s.a.tpr);
    let rl = rx.hypot(ry);
    let ql = qx.hypot(qy);
    if rl == 0.0 {
        return if e.distance_to(s.a) <= tol {
            Hit::One(s.a)
        } else {
            Hit::None
        };
    }
    if ql == 0.0 {
        return if s.distance_to(e.a) <= tol {
            Hit::One(e.a)
        } else {
            Hit::None
        };
    }

    let denom = cross(rx, ry, qx, qy);
    if denom.abs() > 1e-14 * rl * ql {
        let t = cross(wx, wy, qx, qy) / denom;
        let u = cross(wx, wy, rx, ry) / denom;
        let (tt, tu) = (tol / rl, tol / ql);
        if (-tt..=1.0 + tt).contains(&t) && (-tu..=1.0 + tu).contains(&u) {
            return Hit::One(s.point_at(t.clamp(0.0, 1.0)));
        }
        return Hit::None;
    }

    // Parallel: only collinear segments can meet.
    if cross(wx, wy, rx, ry).abs() / rl > tol {
        return Hit::None;
    }
    let rl2 = rl * rl;
    let t0 = (wx * rx + wy * ry) / rl2;
    let t1 = ((e.b.fpr - s.a.fpr) * rx + (e.b.tpr - s.a.tpr) * ry) / rl2;
    let lo = t0.min(t1).max(0.0);
    let hi = t0.max(t1).min(1.0);
    if lo > hi + tol / rl {
        Hit::None
    } else if hi - lo <= tol / rl {
        Hit::One(s.point_at(lo.min(1.0)))
    } else {
        Hit::Two(s.point_at(lo), s.point_at(hi))
    }
}

/// The L1 ball boundary of radius `eps` around a down-curve query point.
/// Vertices are kept raw; they may fall outside the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRhombus {
    pub center: RocPoint,
    pub eps: f64,
    pub up: RocPoint,
    pub right: RocPoint,
    pub down: RocPoint,
    pub left: RocPoint,
}

impl NormRhombus {
    pub fn new(center: RocPoint, eps: f64) -> Self {
        debug_assert!(eps > 0.0, "rhombus radius must be positive");
        let (x, y) = (center.fpr, center.tpr);
        Self {
            center,
            eps,
            up: RocPoint::new(x, y + eps),
            right: RocPoint::new(x + eps, y),
            down: RocPoint::new(x, y - eps),
            left: RocPoint::new(x - eps, y),
        }
    }

    /// Edges in clockwise order: U-R, R-D, D-L, L-U.
    pub fn edges(&self) -> [Segment; 4] {
        [
            Segment::new(self.up, self.right),
            Segment::new(self.right, self.down),
            Segment::new(self.down, self.left),
            Segment::new(self.left, self.up),
        ]
    }

    pub fn contains(&self, p: RocPoint, tol: f64) -> bool {
        l1_distance(p, self.center) <= self.eps + tol
    }

    /// Distinct points where `seg` meets the boundary.
    pub fn intersections(&self, seg: &Segment, tol: f64) -> Vec<RocPoint> {
        let mut out = Vec::new();
        for edge in self.edges() {
            match intersect(seg, &edge, tol) {
                Hit::None => {}
                Hit::One(p) => out.push(p),
                Hit::Two(p, q) => {
                    out.push(p);
                    out.push(q);
                }
            }
        }
        dedup_points(&mut out);
        out
    }
}

fn lex(a: &RocPoint, b: &RocPoint) -> std::cmp::Ordering {
    a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr))
}

fn dedup_points(pts: &mut Vec<RocPoint>) {
    pts.sort_by(lex);
    pts.dedup_by(|a, b| l1_distance(*a, *b) <= ASSERT_TOL);
}

/// Extreme intersections of a curve with a norm boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPoints {
    /// Intersection with the smallest FPR.
    pub left: RocPoint,
    /// Intersection with the largest FPR.
    pub right: RocPoint,
    /// Number of distinct intersection points.
    pub count: usize,
}

/// Every distinct point where the PLA of `roc_up` meets the boundary, in
/// lexicographic (fpr, tpr) order.
pub fn boundary_intersections(roc_up: &RocCurve, rhombus: &NormRhombus, tol: f64) -> Vec<RocPoint> {
    let mut out: Vec<RocPoint> = roc_up
        .segments()
        .iter()
        .flat_map(|s| rhombus.intersections(s, tol))
        .collect();
    dedup_points(&mut out);
    out
}

/// True when the PLA of `roc_up` touches or crosses the rhombus boundary.
pub fn boundary_cut(roc_up: &RocCurve, rhombus: &NormRhombus) -> bool {
    !boundary_intersections(roc_up, rhombus, PREDICATE_TOL).is_empty()
}

/// Leftmost and rightmost intersections of `roc_up` with the boundary. A
/// single tangency yields `left == right`.
pub fn cut_shift(roc_up: &RocCurve, rhombus: &NormRhombus) -> Result<CutPoints> {
    let hits = boundary_intersections(roc_up, rhombus, PREDICATE_TOL);
    match (hits.first(), hits.last()) {
        (Some(&left), Some(&right)) => Ok(CutPoints {
            left,
            right,
            count: hits.len(),
        }),
        _ => Err(FrocError::NoIntersection {
            fpr: rhombus.center.fpr,
            tpr: rhombus.center.tpr,
        }),
    }
}

/// Range minimum and maximum in O(1) after O(n) work. Each block of `BLOCK`
/// values keeps in-block prefix and suffix extrema; a sparse table covers
/// runs of whole blocks.
#[derive(Clone, Debug)]
struct RangeExtrema {
    prefix: Vec<(f64, f64)>,
    suffix: Vec<(f64, f64)>,
    table: Vec<Vec<(f64, f64)>>,
}

const BLOCK: usize = 16;

fn merge(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.min(b.0), a.1.max(b.1))
}

impl RangeExtrema {
    /// Built from `n` values produced by `value`, one block at a time.
    fn new(n: usize, value: impl Fn(usize) -> f64) -> Self {
        let (mut prefix, mut suffix) = (vec![(0.0, 0.0); n], vec![(0.0, 0.0); n]);
        for start in (0..n).step_by(BLOCK) {
            let end = (start + BLOCK).min(n);
            let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
            for i in start..end {
                let v = value(i);
                acc = merge(acc, (v, v));
                prefix[i] = acc;
            }
            acc = (f64::INFINITY, f64::NEG_INFINITY);
            for i in (start..end).rev() {
                let v = value(i);
                acc = merge(acc, (v, v));
                suffix[i] = acc;
            }
        }
        let mut table: Vec<Vec<(f64, f64)>> = vec![(0..n.div_ceil(BLOCK)).map(|b| suffix[b * BLOCK]).collect()];
        let mut span = 1;
        while 2 * span <= table[0].len() {
            let last = &table[table.len() - 1];
            let next = (0..last.len() - span).map(|i| merge(last[i], last[i + span])).collect();
            table.push(next);
            span *= 2;
        }
        Self { prefix, suffix, table }
    }

    /// Min and max over `a..=b`; `value(i)` recomputes the `i`th input.
    fn range(&self, a: usize, b: usize, value: impl Fn(usize) -> f64) -> (f64, f64) {
        let (ba, bb) = (a / BLOCK, b / BLOCK);
        if ba == bb {
            let v = value(a);
            return (a + 1..=b).fold((v, v), |acc, i| merge(acc, (value(i), value(i))));
        }
        let mut out = merge(self.suffix[a], self.prefix[b]);
        if bb > ba + 1 {
            let (lo, hi) = (ba + 1, bb - 1);
            let level = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
            let t = &self.table[level];
            out = merge(out, merge(t[lo], t[hi + 1 - (1 << level)]));
        }
        out
    }
}

/// Search positions carried from one query to the next. When consecutive
/// rhombi move a bounded distance along the curve, each query costs O(1)
/// amortized instead of O(log k).
#[derive(Clone, Copy, Debug, Default)]
pub struct CutCursor {
    band: (usize, usize),
    hits: (usize, usize),
}

/// Boundary-cut search against one fixed up curve.
///
/// In rotated coordinates `u = fpr + tpr`, `w = tpr - fpr` the rhombus is the
/// box `|u - u_c| <= eps`, `|w - w_c| <= eps`, and `u` grows along a monotone
/// curve. The curve inside the band `|u - u_c| <= eps` is a contiguous run of
/// segments, and a run meets the box iff the range of `w` over it overlaps
/// `[w_c - eps, w_c + eps]`. Constant-time range extrema of `w` turn the
/// first and last meeting segments into searches that gallop from the
/// previous answer.
#[derive(Clone, Debug)]
pub struct CutSearch {
    vertices: Vec<RocPoint>,
    w: RangeExtrema,
}

impl CutSearch {
    /// `roc_up` must be monotone in both coordinates.
    pub fn new(roc_up: &RocCurve) -> Self {
        debug_assert!(roc_up.is_monotone());
        let vertices = roc_up.pla_vertices();
        let w = RangeExtrema::new(vertices.len(), |j| vertices[j].tpr - vertices[j].fpr);
        Self { vertices, w }
    }

    fn u(&self, j: usize) -> f64 {
        self.vertices[j].fpr + self.vertices[j].tpr
    }

    fn w(&self, j: usize) -> f64 {
        self.vertices[j].tpr - self.vertices[j].fpr
    }

    pub fn vertices(&self) -> &[RocPoint] {
        &self.vertices
    }

    fn segment(&self, j: usize) -> Segment {
        Segment::new(self.vertices[j], self.vertices[j + 1])
    }

    /// Indices of segments that can meet the rhombus. Both coordinates are
    /// monotone along the curve, so the candidates form one contiguous run.
    fn window_near(&self, rhombus: &NormRhombus, tol: f64, hint: usize) -> Range<usize> {
        let v = &self.vertices;
        let m = v.len();
        if m < 2 {
            return 0..0;
        }
        let reach = rhombus.eps + tol;
        let (cx, cy) = (rhombus.center.fpr, rhombus.center.tpr);
        let first = |pred: &dyn Fn(&RocPoint) -> bool| partition_point_near(m - 1, hint, |j| pred(&v[j + 1]));
        let last = |pred: &dyn Fn(&RocPoint) -> bool| partition_point_near(m - 1, hint, |j| pred(&v[j]));
        let start = first(&|p| p.fpr < cx - reach).max(first(&|p| p.tpr < cy - reach));
        let end = last(&|p| p.fpr <= cx + reach).min(last(&|p| p.tpr <= cy + reach));
        start..end.max(start)
    }

    /// Leftmost and rightmost intersections with the rhombus boundary.
    pub fn extremes(&self, rhombus: &NormRhombus, tol: f64) -> Option<(RocPoint, RocPoint)> {
        let mid = self.vertices.len() / 2;
        let mut cursor = CutCursor {
            band: (mid, mid),
            hits: (mid, mid),
        };
        self.extremes_near(rhombus, tol, &mut cursor)
    }

    /// As `extremes`, starting every search from `cursor` and leaving it at
    /// this query's answers.
    pub fn extremes_near(&self, rhombus: &NormRhombus, tol: f64, cursor: &mut CutCursor) -> Option<(RocPoint, RocPoint)> {
        self.extremes_banded(rhombus, tol, cursor).unwrap_or_else(|| {
            let window = self.window_near(rhombus, tol, cursor.band.0);
            self.extremes_scan(rhombus, tol, window)
        })
    }

    /// Band search. `None` means the fast path does not apply and the caller
    /// should scan; `Some(None)` means there is no intersection.
    fn extremes_banded(
        &self,
        rh: &NormRhombus,
        tol: f64,
        cursor: &mut CutCursor,
    ) -> Option<Option<(RocPoint, RocPoint)>> {
        let m = self.vertices.len();
        let uc = rh.center.fpr + rh.center.tpr;
        let wc = rh.center.tpr - rh.center.fpr;
        let (u_lo, u_hi) = (uc - rh.eps - tol, uc + rh.eps + tol);
        let (w_lo, w_hi) = (wc - rh.eps - tol, wc + rh.eps + tol);
        // Vertices strictly inside the band are a..b.
        let a = partition_point_near(m, cursor.band.0, |j| self.u(j) <= u_lo);
        let b = partition_point_near(m, cursor.band.1, |j| self.u(j) < u_hi);
        cursor.band = (a, b);
        if a == 0 || b == m {
            // The band reaches a curve end, which may lie inside the rhombus.
            return None;
        }
        let w_of = |j: usize| self.w(j);
        let w_at = |j: usize, u: f64| {
            let (up, uq) = (self.u(j), self.u(j + 1));
            let t = if uq > up { ((u - up) / (uq - up)).clamp(0.0, 1.0) } else { 0.0 };
            w_of(j) + t * (w_of(j + 1) - w_of(j))
        };
        let w_entry = w_at(a - 1, u_lo);
        let w_exit = w_at(b - 1, u_hi);
        // Segments a-1 ..= b-1 cover the band; segment j ends at vertex j+1.
        let hits = |(lo, hi): (f64, f64)| lo <= w_hi && hi >= w_lo;
        let prefix = |j: usize| {
            let mut r = (w_entry, w_entry);
            if j + 1 > a {
                r = merge(r, self.w.range(a, j, w_of));
            }
            let end = if j + 1 == b { w_exit } else { w_of(j + 1) };
            hits(merge(r, (end, end)))
        };
        let suffix = |j: usize| {
            let mut r = (w_exit, w_exit);
            if j + 1 < b {
                r = merge(r, self.w.range(j + 1, b - 1, w_of));
            }
            let start = if j + 1 == a { w_entry } else { w_of(j) };
            hits(merge(r, (start, start)))
        };
        if !prefix(b - 1) {
            return Some(None);
        }
        let first = first_true_near(a - 1, b, cursor.hits.0, prefix);
        let last = first_true_near(a - 1, b, cursor.hits.1 + 1, |j| !suffix(j)) - 1;
        cursor.hits = (first, last);
        let left = rh.intersections(&self.segment(first), tol).first().copied();
        let right = rh.intersections(&self.segment(last), tol).last().copied();
        match (left, right) {
            (Some(l), Some(r)) => Some(Some((l, r))),
            _ => None,
        }
    }

    /// Leftmost and rightmost intersections, scanning inward from both ends
    /// of `window` and stopping at the first hit on each side.
    fn extremes_scan(&self, rhombus: &NormRhombus, tol: f64, window: Range<usize>) -> Option<(RocPoint, RocPoint)> {
        let left = window.clone().find_map(|j| {
            let hits = rhombus.intersections(&self.segment(j), tol);
            hits.first().copied()
        })?;
        let right = window.rev().find_map(|j| {
            let hits = rhombus.intersections(&self.segment(j), tol);
            hits.last().copied()
        })?;
        Some((left, right))
    }

    /// All distinct intersections with the rhombus boundary, in curve order.
    pub fn intersections(&self, rhombus: &NormRhombus, tol: f64) -> Vec<RocPoint> {
        let mid = self.vertices.len() / 2;
        let mut cursor = CutCursor {
            band: (mid, mid),
            hits: (mid, mid),
        };
        self.intersections_near(rhombus, tol, &mut cursor)
    }

    /// As `intersections`, starting from `cursor`. Inside the band only
    /// crossings of `w = w_c +- eps` matter, so runs of segments that stay
    /// above, below or inside that strip are skipped with range queries. The
    /// cost grows with the number of crossings rather than the band width.
    pub fn intersections_near(&self, rh: &NormRhombus, tol: f64, cursor: &mut CutCursor) -> Vec<RocPoint> {
        let m = self.vertices.len();
        let mut out = Vec::new();
        let uc = rh.center.fpr + rh.center.tpr;
        let wc = rh.center.tpr - rh.center.fpr;
        let (u_lo, u_hi) = (uc - rh.eps - tol, uc + rh.eps + tol);
        let a = partition_point_near(m, cursor.band.0, |j| self.u(j) <= u_lo);
        let b = partition_point_near(m, cursor.band.1, |j| self.u(j) < u_hi);
        cursor.band = (a, b);
        if m < 2 || a == m || b == 0 {
            return out;
        }
        // Segments first..=last meet the band; the two end ones may cross
        // its sides and are always examined.
        let (first, last) = (a.saturating_sub(1), b.min(m - 1) - 1);
        // Vertices within `margin` of a strip edge are examined rather than
        // classified.
        let margin = 8.0 * tol + 4.0 * f64::EPSILON;
        let (above, below) = (wc + rh.eps + margin, wc - rh.eps - margin);
        let (inner_hi, inner_lo) = (wc + rh.eps - margin, wc - rh.eps + margin);
        let w_of = |j: usize| self.w(j);
        let mut j = first;
        loop {
            out.extend(rh.intersections(&self.segment(j), tol));
            let v = j + 1;
            if v > last {
                break;
            }
            let w = w_of(v);
            let leaves = |(lo, hi): (f64, f64)| {
                if w > above {
                    lo <= above
                } else if w < below {
                    hi >= below
                } else if inner_lo < w && w < inner_hi {
                    lo <= inner_lo || hi >= inner_hi
                } else {
                    true
                }
            };
            // First vertex after v whose run with v leaves v's class; the
            // segments in between cannot meet the boundary.
            let t = first_true_near(v + 1, last + 2, v + 1, |t| leaves(self.w.range(v, t, w_of)));
            j = (t - 1).min(last);
        }
        dedup_points(&mut out);
        out
    }
}

/// Smallest `j` in `lo..hi` with `pred(j)`, for `pred` false then true;
/// `hi` when none. Gallops outward from `hint`.
fn first_true_near(lo: usize, hi: usize, hint: usize, pred: impl Fn(usize) -> bool) -> usize {
    lo + partition_point_near(hi - lo, hint.clamp(lo, hi) - lo, |i| !pred(lo + i))
}

/// True when `p` lies on or below the PLA of `curve`.
pub fn hypograph_test(p: RocPoint, curve: &RocCurve) -> bool {
    hypograph_test_vertices(p, &curve.vertices(), PREDICATE_TOL)
}

pub(crate) fn hypograph_test_vertices(p: RocPoint, vertices: &[RocPoint], tol: f64) -> bool {
    p.tpr <= interpolate_vertices(vertices, p.fpr) + tol
}

/// Triangle area from side lengths (Heron), evaluated in Kahan's
/// cancellation-free ordering. Collinear points give 0.
pub fn triangle_area_heron(a: RocPoint, b: RocPoint, c: RocPoint) -> f64 {
    let mut sides = [l2_distance(b, c), l2_distance(a, c), l2_distance(a, b)];
    sides.sort_by(|x, y| y.total_cmp(x));
    let [x, y, z] = sides;
    let radicand = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    0.25 * radicand.max(0.0).sqrt()
}

/// Area of quadrilateral `abcd` as the sum of triangles `abc` and `acd`.
pub fn quad_area(a: RocPoint, b: RocPoint, c: RocPoint, d: RocPoint) -> f64 {
    triangle_area_heron(a, b, c) + triangle_area_heron(a, c, d)
}
