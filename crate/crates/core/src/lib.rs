//! Post-processing that transports one protected group's ROC curve toward the
//! other's so the two curves stay within an L1 radius at every query threshold.
//!
//! The pipeline is:
//!
//! 1. [`roc::empirical_roc`] samples each group's ROC at `k` equidistant
//!    thresholds and the piecewise-linear approximation joins the samples.
//! 2. [`transport::fair_roc`] moves every point of the dominating ("up") curve
//!    onto or inside the L1 ball around the matching point of the other curve.
//! 3. [`classifier::construct_classifier`] turns the moved points into a
//!    randomized classifier mixing thresholded, always-accept and
//!    always-reject decisions.
//!
//! [`oracle::dp_optimal`] solves small instances by exhaustive dynamic
//! programming and is used to check the transport's AUC against the optimum.

pub mod classifier;
pub mod data_io;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod roc;
pub mod tolerance;
pub mod transport;

pub use classifier::{
    construct_classifier, convex_mix, predict, Mixture, RandomizedClassifier, VertexClassifier,
};
pub use error::{FrocError, Result};
pub use geometry::{NormRhombus, Segment};
pub use oracle::{dp_optimal, optimality_report, OptimalityReport, OracleSolution};
pub use pipeline::{evaluate, run, sweep, Evaluation, PipelineRun, SweepRow};
pub use roc::{
    auc, dominance, empirical_roc, interpolate, pla, pla_loss_bound, Dominance, Group,
    GroupedScores, Normalization, QueryGrid, RocCurve, RocPoint, ScoreRow, SlopeBounds,
};
pub use tolerance::Tolerance;
pub use transport::{
    auc_loss, fair_roc, fair_roc_with, verify_fairness, FairnessReport, ShiftDecision, ShiftKind,
    TransportOptions, TransportPlan,
};
