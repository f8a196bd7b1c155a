//! Group fairness and accuracy metrics.

use serde::{Deserialize, Serialize};

use crate::error::{FrocError, Result};
use crate::roc::{auc, Group, GroupedScores, QueryGrid, RocCurve};

/// Confusion counts for one group at one threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdStat {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ThresholdStat {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.positives())
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.negatives())
    }

    pub fn fnr(&self) -> f64 {
        1.0 - self.tpr()
    }

    pub fn positive_rate(&self) -> f64 {
        ratio(self.tp + self.fp, self.total())
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

/// Per-group, per-threshold confusion counts under the "score ≥ t" rule.
/// Entry `[g][i]` holds grid threshold `t_{i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub grid: QueryGrid,
    pub stats: [Vec<ThresholdStat>; 2],
}

impl ThresholdStats {
    pub fn compute(data: &GroupedScores, grid: QueryGrid) -> Self {
        let stats = Group::BOTH.map(|g| {
            let pos = data.sorted_scores(g, true);
            let neg = data.sorted_scores(g, false);
            grid.thresholds()
                .into_iter()
                .map(|t| {
                    let tp = (pos.len() - pos.partition_point(|&s| s < t)) as u64;
                    let fp = (neg.len() - neg.partition_point(|&s| s < t)) as u64;
                    ThresholdStat {
                        tp,
                        fn_: pos.len() as u64 - tp,
                        fp,
                        tn: neg.len() as u64 - fp,
                    }
                })
                .collect()
        });
        Self { grid, stats }
    }

    pub fn get(&self, group: Group, threshold_index: usize) -> Option<&ThresholdStat> {
        self.stats[group.index()].get(threshold_index.wrapping_sub(1))
    }
}

/// `|n_a/d_a - n_b/d_b|` from the exact cross product, rounded once. An empty
/// denominator stands for the rate `empty`.
fn rate_gap((n_a, d_a): (u64, u64), (n_b, d_b): (u64, u64), empty: u64) -> f64 {
    let norm = |n: u64, d: u64| if d == 0 { (empty, 1) } else { (n, d) };
    let ((n_a, d_a), (n_b, d_b)) = (norm(n_a, d_a), norm(n_b, d_b));
    let cross = (n_a as i128 * d_b as i128 - n_b as i128 * d_a as i128).unsigned_abs();
    cross as f64 / (d_a as u128 * d_b as u128) as f64
}

fn fpr_gap(a: &ThresholdStat, b: &ThresholdStat) -> f64 {
    rate_gap((a.fp, a.negatives()), (b.fp, b.negatives()), 0)
}

/// Equalized-odds gap `|ΔFPR| + |ΔFNR|`. Differences are taken on the exact
/// fractions, so this agrees bit for bit with [`eo_gap_tpr_form`].
pub fn eo_gap(a: &ThresholdStat, b: &ThresholdStat) -> f64 {
    fpr_gap(a, b) + rate_gap((a.fn_, a.positives()), (b.fn_, b.positives()), 1)
}

/// Same gap written as `|ΔFPR| + |ΔTPR|`, the L1 distance between the two
/// ROC operating points.
pub fn eo_gap_tpr_form(a: &ThresholdStat, b: &ThresholdStat) -> f64 {
    fpr_gap(a, b) + rate_gap((a.tp, a.positives()), (b.tp, b.positives()), 0)
}

/// Positive-prediction rate ratio `min / max` across groups. Both rates zero
/// gives 1.
pub fn disparate_impact(predictions: &[bool], groups: &[Group]) -> Result<f64> {
    if predictions.len() != groups.len() {
        return Err(FrocError::InvalidInput(format!(
            "{} predictions for {} group labels",
            predictions.len(),
            groups.len()
        )));
    }
    let mut accepted = [0u64; 2];
    let mut count = [0u64; 2];
    for (&p, &g) in predictions.iter().zip(groups) {
        count[g.index()] += 1;
        accepted[g.index()] += p as u64;
    }
    if let Some(g) = Group::BOTH.into_iter().find(|g| count[g.index()] == 0) {
        return Err(FrocError::InvalidInput(format!("group {g} has no samples")));
    }
    Ok(rate_ratio(
        ratio(accepted[0], count[0]),
        ratio(accepted[1], count[1]),
    ))
}

pub fn rate_ratio(r0: f64, r1: f64) -> f64 {
    let (lo, hi) = if r0 <= r1 { (r0, r1) } else { (r1, r0) };
    if hi == 0.0 {
        1.0
    } else {
        lo / hi
    }
}

pub fn accuracy(predictions: &[bool], labels: &[bool]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(FrocError::EmptyDataset);
    }
    if predictions.len() != labels.len() {
        return Err(FrocError::InvalidInput(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossDecomposition {
    pub l_pla: f64,
    pub l_auc: f64,
    pub total: f64,
}

/// Splits total AUC loss into the part lost by sampling only k thresholds and
/// the part lost by transport.
pub fn loss_decomposition(
    reference_fine: &RocCurve,
    pla_curve: &RocCurve,
    fair_curve: &RocCurve,
) -> LossDecomposition {
    let l_pla = auc(reference_fine) - auc(pla_curve);
    let l_auc = auc(pla_curve) - auc(fair_curve);
    LossDecomposition {
        l_pla,
        l_auc,
        total: l_pla + l_auc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roc::{RocPoint, ScoreRow};

    fn stat(tp: u64, fn_: u64, fp: u64, tn: u64) -> ThresholdStat {
        ThresholdStat { tp, fn_, fp, tn }
    }

    #[test]
    fn eo_gap_examples() {
        let a = stat(7, 3, 2, 8);
        assert_eq!(eo_gap(&a, &a), 0.0);
        // fpr 0.2 vs 0.3, tpr 0.7 vs 0.6
        let b = stat(6, 4, 3, 7);
        assert!((eo_gap(&a, &b) - 0.2).abs() < 1e-12);
        assert_eq!(eo_gap(&a, &b), eo_gap_tpr_form(&a, &b));
        // No positives in `c`: its tpr is 0 and fnr 1 by convention.
        let c = stat(0, 0, 4, 6);
        assert_eq!(eo_gap(&a, &c), eo_gap_tpr_form(&a, &c));
        assert!((eo_gap(&a, &c) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn rate_accessors() {
        let s = stat(3, 1, 1, 3);
        assert_eq!(s.tpr(), 0.75);
        assert_eq!(s.fnr(), 0.25);
        assert_eq!(s.fpr(), 0.25);
        assert_eq!(s.positive_rate(), 0.5);
        assert_eq!(s.accuracy(), 0.75);
    }

    #[test]
    fn disparate_impact_examples() {
        let groups = [Group::Zero; 10]
            .into_iter()
            .chain([Group::One; 10])
            .collect::<Vec<_>>();
        let mut preds = vec![false; 20];
        for p in preds.iter_mut().take(4) {
            *p = true;
        }
        for p in preds.iter_mut().skip(10).take(5) {
            *p = true;
        }
        assert!((disparate_impact(&preds, &groups).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(disparate_impact(&[false; 20], &groups).unwrap(), 1.0);
        assert_eq!(disparate_impact(&[true; 20], &groups).unwrap(), 1.0);
        assert!(disparate_impact(&[true], &[Group::Zero]).is_err());
        assert_eq!(rate_ratio(0.5, 0.4), rate_ratio(0.4, 0.5));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[true, false], &[true, false]).unwrap(), 1.0);
        assert_eq!(accuracy(&[true, false], &[false, true]).unwrap(), 0.0);
        assert_eq!(accuracy(&[true, true], &[true, false]).unwrap(), 0.5);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn stats_agree_with_empirical_roc() {
        let rows = vec![
            ScoreRow { score: 0.9, group: Group::Zero, label: true },
            ScoreRow { score: 0.4, group: Group::Zero, label: true },
            ScoreRow { score: 0.3, group: Group::Zero, label: false },
            ScoreRow { score: 0.7, group: Group::Zero, label: false },
            ScoreRow { score: 0.6, group: Group::One, label: true },
            ScoreRow { score: 0.2, group: Group::One, label: false },
        ];
        let data = GroupedScores::new(rows, crate::roc::Normalization::IDENTITY).unwrap();
        let grid = QueryGrid::new(4).unwrap();
        let stats = ThresholdStats::compute(&data, grid);
        let roc = crate::roc::empirical_roc(&data, Group::Zero, &grid).unwrap();
        for i in 1..=4 {
            let s = stats.get(Group::Zero, i).unwrap();
            let q = roc.points()[4 - i];
            assert_eq!(RocPoint::new(s.fpr(), s.tpr()), q);
        }
    }

    #[test]
    fn decomposition_examples() {
        let c = RocCurve::new(vec![RocPoint::new(0.2, 0.6)]).unwrap();
        let d = loss_decomposition(&c, &c, &c);
        assert_eq!((d.l_pla, d.l_auc, d.total), (0.0, 0.0, 0.0));
        let fine = RocCurve::new(vec![RocPoint::new(0.1, 0.5), RocPoint::new(0.2, 0.6)]).unwrap();
        let d = loss_decomposition(&fine, &c, &c);
        assert!(d.l_pla > 0.0);
        assert_eq!(d.l_auc, 0.0);
        assert_eq!(d.total, d.l_pla);
    }
}
