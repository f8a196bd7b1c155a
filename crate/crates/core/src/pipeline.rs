//! End-to-end runs: group ROCs, orientation, transport, classifier
//! construction and Monte Carlo evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{construct_classifier, predict_normalized, RandomizedClassifier};
use crate::error::{FrocError, Result};
use crate::metrics::{rate_ratio, ThresholdStat, ThresholdStats};
use crate::roc::{
    auc, dominance, empirical_roc, interpolate, Dominance, Group, GroupedScores, QueryGrid,
    RocCurve, DEFAULT_DOMINANCE_RESOLUTION,
};
use crate::transport::{auc_loss, fair_roc_with, verify_fairness, FairnessReport, TransportOptions, TransportPlan};

/// Default number of Monte Carlo draws per group and curve position.
pub const DEFAULT_DRAWS: usize = 100_000;

/// Empirical ROC of each group, indexed by group.
pub fn group_curves(data: &GroupedScores, grid: &QueryGrid) -> Result<[RocCurve; 2]> {
    Ok([
        empirical_roc(data, Group::Zero, grid)?,
        empirical_roc(data, Group::One, grid)?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub up_group: Group,
    /// Crossing fprs when the curves intersect in a tolerated region.
    pub crossings: Vec<f64>,
    pub warning: Option<String>,
}

/// Decides which group's curve lies above. Ties make group 0 the up group.
/// Curves that cross only where fpr ≤ 0.2 or tpr ≥ 0.5 are accepted with a
/// warning and the larger-AUC group is taken as up; other crossings are
/// rejected.
pub fn orient(curves: &[RocCurve; 2]) -> Result<Orientation> {
    match dominance(&curves[0], &curves[1], DEFAULT_DOMINANCE_RESOLUTION) {
        Dominance::Curve0Up => Ok(Orientation {
            up_group: Group::Zero,
            crossings: Vec::new(),
            warning: None,
        }),
        Dominance::Curve1Up => Ok(Orientation {
            up_group: Group::One,
            crossings: Vec::new(),
            warning: None,
        }),
        Dominance::Intersecting(crossings) => {
            let benign = crossings
                .iter()
                .all(|&x| x <= 0.2 || interpolate(&curves[0], x) >= 0.5);
            if !benign {
                return Err(FrocError::IntersectingCurves { crossings });
            }
            let up_group = if auc(&curves[1]) > auc(&curves[0]) {
                Group::One
            } else {
                Group::Zero
            };
            let warning = Some(format!(
                "group ROC curves cross at fpr {crossings:?}; treating group {up_group} as the upper curve"
            ));
            Ok(Orientation {
                up_group,
                crossings,
                warning,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub grid: QueryGrid,
    pub curves: [RocCurve; 2],
    pub orientation: Orientation,
    pub plan: TransportPlan,
    pub classifier: RandomizedClassifier,
    pub fairness: FairnessReport,
    pub auc_loss: f64,
}

impl PipelineRun {
    pub fn up_group(&self) -> Group {
        self.orientation.up_group
    }
}

/// Builds both group curves, transports the upper one and constructs the
/// randomized classifier.
pub fn run(
    data: &GroupedScores,
    grid: QueryGrid,
    eps: f64,
    options: TransportOptions,
) -> Result<PipelineRun> {
    let curves = group_curves(data, &grid)?;
    let orientation = orient(&curves)?;
    let up = orientation.up_group;
    let (base_up, base_down) = (&curves[up.index()], &curves[up.other().index()]);
    let plan = fair_roc_with(base_up, base_down, eps, &options)?;
    let classifier = construct_classifier(&plan, base_up, base_down, up, grid, data.normalization())?;
    let fairness = verify_fairness(&plan.fair_up, &plan.fair_down, eps);
    let auc_loss = auc_loss(&plan, base_up);
    Ok(PipelineRun {
        grid,
        curves,
        orientation,
        plan,
        classifier,
        fairness,
        auc_loss,
    })
}

/// Monte Carlo confusion counts of a randomized classifier. `stats[g][p]` is
/// group `g` at curve position `p + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub stats: [Vec<ThresholdStat>; 2],
    /// Pooled accuracy per curve position, weighting groups by their share of
    /// the data.
    pub accuracy: Vec<f64>,
}

impl Evaluation {
    /// Curve position (1-based) with the highest pooled accuracy.
    pub fn best_position(&self) -> usize {
        let mut best = 0;
        for (i, &a) in self.accuracy.iter().enumerate() {
            if a > self.accuracy[best] {
                best = i;
            }
        }
        best + 1
    }

    pub fn best_accuracy(&self) -> f64 {
        self.accuracy[self.best_position() - 1]
    }

    /// Positive-rate ratio between groups at a curve position.
    pub fn disparate_impact(&self, position: usize) -> f64 {
        let r = |g: Group| self.stats[g.index()][position - 1].positive_rate();
        rate_ratio(r(Group::Zero), r(Group::One))
    }
}

/// Evaluates `rc` on the rows of `data`, cycling through each group's rows in
/// whole passes until at least `draws` predictions per group and position are
/// made. Sample ids are stable, so results depend only on `seed`.
pub fn evaluate(rc: &RandomizedClassifier, data: &GroupedScores, draws: usize, seed: u64) -> Evaluation {
    let rows = data.rows();
    let n = rows.len() as u64;
    let by_group: [Vec<(u64, f64, bool)>; 2] = Group::BOTH.map(|g| {
        rows.iter()
            .enumerate()
            .filter(|(_, r)| r.group == g)
            .map(|(i, r)| (i as u64, r.score, r.label))
            .collect()
    });
    let k = rc.k();
    let stats = Group::BOTH.map(|g| {
        let members = &by_group[g.index()];
        let passes = draws.div_ceil(members.len().max(1)).max(1) as u64;
        (1..=k)
            .into_par_iter()
            .map(|pos| {
                let mut s = ThresholdStat::default();
                for pass in 0..passes {
                    for &(id, score, label) in members {
                        let accept = predict_normalized(rc, score, g, pos, seed, pass * n + id)
                            .expect("position within 1..=k");
                        match (accept, label) {
                            (true, true) => s.tp += 1,
                            (false, true) => s.fn_ += 1,
                            (true, false) => s.fp += 1,
                            (false, false) => s.tn += 1,
                        }
                    }
                }
                s
            })
            .collect::<Vec<_>>()
    });
    let share = by_group.each_ref().map(|m| m.len() as f64 / n as f64);
    let accuracy = (0..k)
        .map(|p| {
            Group::BOTH
                .iter()
                .map(|g| share[g.index()] * stats[g.index()][p].accuracy())
                .sum()
        })
        .collect();
    Evaluation { stats, accuracy }
}

/// Best pooled accuracy of plain thresholding over the grid, with the curve
/// position achieving it.
pub fn baseline_best_accuracy(data: &GroupedScores, grid: QueryGrid) -> (usize, f64) {
    let stats = ThresholdStats::compute(data, grid);
    let n = data.len() as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 1..=grid.k() {
        let hits: u64 = Group::BOTH
            .iter()
            .map(|&g| {
                let s = stats.get(g, i).expect("threshold index within grid");
                s.tp + s.tn
            })
            .sum();
        let acc = hits as f64 / n;
        let pos = grid.k() + 1 - i;
        if acc > best.1 || (acc == best.1 && pos < best.0) {
            best = (pos, acc);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub auc_loss: f64,
    pub accuracy_at_best_threshold: f64,
    pub disparate_impact: f64,
    pub max_gap: f64,
}

/// `steps` evenly spaced values from `start` to `stop` inclusive.
pub fn eps_grid(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && start < stop && stop.is_finite()) || steps < 2 {
        return Err(FrocError::InvalidInput(format!(
            "sweep needs 0 < start < stop and at least 2 steps, got {start}..{stop} in {steps}"
        )));
    }
    Ok((0..steps)
        .map(|i| {
            // Weighted from both ends so the endpoints are exact.
            let n = (steps - 1) as f64;
            (start * (n - i as f64) + stop * i as f64) / n
        })
        .collect())
}

/// Runs the pipeline at each epsilon in parallel. Rows come back in the
/// order of `eps_values`.
pub fn sweep(
    data: &GroupedScores,
    grid: QueryGrid,
    eps_values: &[f64],
    options: TransportOptions,
    draws: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    eps_values
        .par_iter()
        .map(|&eps| {
            let r = run(data, grid, eps, options)?;
            let ev = evaluate(&r.classifier, data, draws, seed);
            let best = ev.best_position();
            Ok(SweepRow {
                eps,
                auc_loss: r.auc_loss,
                accuracy_at_best_threshold: ev.accuracy[best - 1],
                disparate_impact: ev.disparate_impact(best),
                max_gap: r.fairness.max_index_gap,
            })
        })
        .collect()
}

/// Largest index-matched L1 gap between the two group curves.
pub fn initial_gap(curves: &[RocCurve; 2]) -> f64 {
    curves[0]
        .points()
        .iter()
        .zip(curves[1].points())
        .map(|(&a, &b)| crate::geometry::l1_distance(a, b))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{generate_synthetic, LogisticCell, SyntheticSpec};
    use crate::roc::RocPoint;

    fn biased(seed: u64) -> GroupedScores {
        let c = |location, scale| LogisticCell {
            location,
            scale,
            count: 800,
        };
        let spec = SyntheticSpec {
            cells: [[c(0.35, 0.1), c(0.65, 0.1)], [c(0.4, 0.1), c(0.6, 0.1)]],
            seed,
        };
        generate_synthetic(&spec).unwrap().0
    }

    #[test]
    fn orient_examples() {
        let lo = RocCurve::new(vec![RocPoint::new(0.3, 0.5)]).unwrap();
        let hi = RocCurve::new(vec![RocPoint::new(0.3, 0.7)]).unwrap();
        assert_eq!(orient(&[lo.clone(), hi.clone()]).unwrap().up_group, Group::One);
        assert_eq!(orient(&[hi.clone(), lo.clone()]).unwrap().up_group, Group::Zero);
        assert_eq!(orient(&[lo.clone(), lo.clone()]).unwrap().up_group, Group::Zero);

        // Crossing at fpr 0.5, tpr 0.5: rejected.
        let a = RocCurve::new(vec![RocPoint::new(0.5, 0.5), RocPoint::new(0.5, 0.9)]).unwrap();
        let b = RocCurve::new(vec![RocPoint::new(0.2, 0.45), RocPoint::new(0.6, 0.6)]).unwrap();
        assert!(matches!(orient(&[a, b]), Err(FrocError::IntersectingCurves { .. })));

        // Crossing near the origin only: warned.
        let a = RocCurve::new(vec![RocPoint::new(0.02, 0.2), RocPoint::new(0.3, 0.7)]).unwrap();
        let b = RocCurve::new(vec![RocPoint::new(0.01, 0.05), RocPoint::new(0.2, 0.8)]).unwrap();
        let o = orient(&[a, b]).unwrap();
        assert!(o.warning.is_some());
        assert_eq!(o.up_group, Group::One);
    }

    #[test]
    fn run_is_fair() {
        let data = biased(1);
        let grid = QueryGrid::new(20).unwrap();
        let r = run(&data, grid, 0.02, TransportOptions::default()).unwrap();
        assert!(r.fairness.pass, "{:?}", r.fairness);
        assert!(r.auc_loss >= -1e-12);
        assert_eq!(r.plan.fair_down, r.curves[r.up_group().other().index()]);
    }

    #[test]
    fn evaluation_matches_fair_points() {
        let data = biased(2);
        let grid = QueryGrid::new(10).unwrap();
        let r = run(&data, grid, 0.03, TransportOptions::default()).unwrap();
        let ev = evaluate(&r.classifier, &data, 20_000, 5);
        let up = r.up_group();
        for (p, q) in r.plan.fair_up.points().iter().enumerate() {
            let s = ev.stats[up.index()][p];
            assert!((s.fpr() - q.fpr).abs() < 0.02 && (s.tpr() - q.tpr).abs() < 0.02, "{p}: {q} vs {s:?}");
        }
        let down = &r.curves[up.other().index()];
        for (p, q) in down.points().iter().enumerate() {
            let s = ev.stats[up.other().index()][p];
            assert_eq!(RocPoint::new(s.fpr(), s.tpr()), *q);
        }
        assert_eq!(ev, evaluate(&r.classifier, &data, 20_000, 5));
    }

    #[test]
    fn baseline_matches_trivial_evaluation() {
        let data = biased(3);
        let grid = QueryGrid::new(15).unwrap();
        let r = run(&data, grid, 1.0, TransportOptions::default()).unwrap();
        assert!(r.plan.decisions.iter().all(|d| d.target == d.raw_target));
        let ev = evaluate(&r.classifier, &data, 1, 0);
        let (pos, acc) = baseline_best_accuracy(&data, grid);
        assert!((ev.best_accuracy() - acc).abs() < 1e-12);
        assert_eq!(ev.best_position(), pos);
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let data = biased(4);
        let grid = QueryGrid::new(10).unwrap();
        let eps = eps_grid(0.01, 0.1, 4).unwrap();
        let a = sweep(&data, grid, &eps, TransportOptions::default(), 5_000, 9).unwrap();
        let b = sweep(&data, grid, &eps, TransportOptions::default(), 5_000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| r.eps).collect::<Vec<_>>(), eps);
        for w in a.windows(2) {
            assert!(w[1].auc_loss <= w[0].auc_loss + 1e-9);
        }
        assert!(eps_grid(0.1, 0.01, 3).is_err());
    }
}
