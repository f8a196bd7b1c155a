use std::path::PathBuf;

use crate::roc::Group;

pub type Result<T, E = FrocError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum FrocError {
    #[error("point ({fpr}, {tpr}) lies outside the unit square")]
    PointOutOfRange { fpr: f64, tpr: f64 },

    #[error("curve is not monotone at indices {indices:?}")]
    NonMonotone { indices: Vec<usize> },

    #[error("curve has no query points")]
    EmptyCurve,

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("group {group} has no {} samples", if *.label { "positive" } else { "negative" })]
    MissingCell { group: Group, label: bool },

    #[error("k must be at least 1")]
    InvalidK,

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("curves have different lengths: up has {up} points, down has {down}")]
    LengthMismatch { up: usize, down: usize },

    #[error("curve does not intersect the norm boundary around ({fpr}, {tpr})")]
    NoIntersection { fpr: f64, tpr: f64 },

    #[error("ROC curves intersect outside the tolerated region at fpr {crossings:?}")]
    IntersectingCurves { crossings: Vec<f64> },

    #[error("triangle vertices are collinear (determinant {det:e})")]
    DegenerateTriangle { det: f64 },

    #[error("target lies outside the triangle: barycentric weight {coordinate} = {value:e}")]
    OutsideTriangle { coordinate: &'static str, value: f64 },

    #[error("fair point {index} of group {group} is not achievable by randomizing the base classifier")]
    NotAchievable { index: usize, group: Group },

    #[error("mixture at index {index} recomposes to ({fpr}, {tpr}) off by {error:e}")]
    Recomposition { index: usize, fpr: f64, tpr: f64, error: f64 },

    #[error("threshold index {index} is outside 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("oracle supports at most {max} query points, got {k}")]
    OracleTooLarge { k: usize, max: usize },

    #[error("oracle resolution must be at least {min}, got {delta}")]
    InvalidDelta { delta: f64, min: f64 },

    #[error("no achievable fair point within epsilon at index {index}")]
    Infeasible { index: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: expected a '{expected}' document (format_version 1), found kind '{kind}' version {version}")]
    WrongDocument {
        path: PathBuf,
        expected: &'static str,
        kind: String,
        version: u32,
    },
}
