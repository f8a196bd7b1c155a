//! Score CSV ingestion, synthetic instances and JSON documents.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifier::RandomizedClassifier;
use crate::error::{FrocError, Result};
use crate::roc::{Group, GroupedScores, QueryGrid, RocCurve, RocPoint, ScoreRow, SlopeBounds};
use crate::transport::TransportPlan;

pub const SCORE_HEADER: [&str; 3] = ["score", "group", "label"];
pub const FORMAT_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FrocError + '_ {
    move |source| FrocError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a score CSV and min-max normalizes its scores.
pub fn load_scores(path: impl AsRef<Path>) -> Result<GroupedScores> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_scores(file, path)
}

/// Parses score CSV text. `path` only labels error messages.
pub fn parse_scores(reader: impl Read, path: &Path) -> Result<GroupedScores> {
    GroupedScores::from_raw(parse_rows(reader, path)?)
}

/// Parses raw, unnormalized rows.
pub fn parse_rows(reader: impl Read, path: &Path) -> Result<Vec<ScoreRow>> {
    let parse_err = |line: u64, message: String| FrocError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().ne(SCORE_HEADER) {
        return Err(parse_err(
            1,
            format!("expected header \"score,group,label\", found {:?}", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let score: f64 = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("invalid score {:?}", &record[0])))?;
        if !score.is_finite() {
            return Err(parse_err(line, format!("score {score} is not finite")));
        }
        let group = match record[1].trim() {
            "0" => Group::Zero,
            "1" => Group::One,
            other => return Err(parse_err(line, format!("group must be 0 or 1, found {other:?}"))),
        };
        let label = match record[2].trim() {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("label must be 0 or 1, found {other:?}"))),
        };
        rows.push(ScoreRow { score, group, label });
    }
    Ok(rows)
}

pub fn write_scores(path: impl AsRef<Path>, rows: &[ScoreRow]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| FrocError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    w.write_record(SCORE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.score.to_string(),
            u8::from(r.group).to_string(),
            u8::from(r.label).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// A logistic score distribution clipped to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticCell {
    pub location: f64,
    pub scale: f64,
    pub count: usize,
}

impl LogisticCell {
    fn cdf(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-(x - self.location) / self.scale).exp())
    }

    /// `P(score >= t)` for `t` in `(0, 1]`. Clipping only moves mass onto 0
    /// and 1, so this is the unclipped tail.
    pub fn survival(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = loop {
            let u = rng.random::<f64>();
            if u > 0.0 {
                break u;
            }
        };
        (self.location + self.scale * (u / (1.0 - u)).ln()).clamp(0.0, 1.0)
    }

    /// Density supremum `1 / (4 scale)`.
    pub fn slope_bound(&self) -> f64 {
        1.0 / (4.0 * self.scale)
    }
}

/// Synthetic dataset description. `cells[g][l]` is group `g`, label `l`
/// (0 negative, 1 positive).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub cells: [[LogisticCell; 2]; 2],
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn cell(&self, group: Group, label: bool) -> &LogisticCell {
        &self.cells[group.index()][label as usize]
    }

    pub fn validate(&self) -> Result<()> {
        for c in self.cells.iter().flatten() {
            if !(c.scale > 0.0 && c.scale.is_finite()) || !c.location.is_finite() {
                return Err(FrocError::InvalidInput(format!(
                    "logistic cell needs finite location and positive scale, got {c:?}"
                )));
            }
            if c.count == 0 {
                return Err(FrocError::InvalidInput("logistic cell needs at least one sample".into()));
            }
        }
        Ok(())
    }

    /// Analytic slope bounds: the largest positive-class and negative-class
    /// density suprema over both groups.
    pub fn slope_bounds(&self) -> SlopeBounds {
        let max_over = |label: bool| {
            Group::BOTH
                .iter()
                .map(|&g| self.cell(g, label).slope_bound())
                .fold(0.0, f64::max)
        };
        SlopeBounds {
            u_t: max_over(true),
            u_f: max_over(false),
        }
    }
}

/// Raw rows for `spec`. Deterministic in `spec.seed`.
pub fn synthetic_rows(spec: &SyntheticSpec) -> Result<Vec<ScoreRow>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::new();
    for group in Group::BOTH {
        for label in [false, true] {
            let cell = spec.cell(group, label);
            rows.extend((0..cell.count).map(|_| ScoreRow {
                score: cell.sample(&mut rng),
                group,
                label,
            }));
        }
    }
    Ok(rows)
}

/// Samples `spec`. Scores already lie in `[0, 1]` and are kept as drawn.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(GroupedScores, SlopeBounds)> {
    let rows = synthetic_rows(spec)?;
    let data = GroupedScores::new(rows, crate::roc::Normalization::IDENTITY)?;
    Ok((data, spec.slope_bounds()))
}

/// Exact population ROC of one group of `spec` on `grid`.
pub fn population_roc(spec: &SyntheticSpec, group: Group, grid: &QueryGrid) -> RocCurve {
    let neg = spec.cell(group, false);
    let pos = spec.cell(group, true);
    let points = (1..=grid.k())
        .map(|p| {
            let t = grid.threshold_at_position(p);
            RocPoint::new(neg.survival(t), pos.survival(t))
        })
        .collect();
    RocCurve::from_points_unchecked(points)
}

/// Kinds of JSON documents.
pub trait Document: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Document for RocCurve {
    const KIND: &'static str = "curve";
}

impl Document for TransportPlan {
    const KIND: &'static str = "plan";
}

impl Document for RandomizedClassifier {
    const KIND: &'static str = "classifier";
}

pub fn to_json<T: Document>(value: &T) -> serde_json::Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("format_version".into(), FORMAT_VERSION.into());
    map.insert("kind".into(), T::KIND.into());
    map.insert(T::KIND.into(), serde_json::to_value(value)?);
    serde_json::to_string_pretty(&serde_json::Value::Object(map))
}

pub fn from_json<T: Document>(text: &str, path: &Path) -> Result<T> {
    let json_err = |source| FrocError::Json {
        path: path.to_path_buf(),
        source,
    };
    let mut doc: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
    let version = doc.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    let kind = doc.get("kind").and_then(|v| v.as_str()).unwrap_or("").to_owned();
    if version != FORMAT_VERSION || kind != T::KIND {
        return Err(FrocError::WrongDocument {
            path: path.to_path_buf(),
            expected: T::KIND,
            kind,
            version,
        });
    }
    let body = doc
        .get_mut(T::KIND)
        .map(serde_json::Value::take)
        .unwrap_or(serde_json::Value::Null);
    serde_json::from_value(body).map_err(json_err)
}

pub fn export<T: Document>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_json(value).map_err(|source| FrocError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut file = File::create(path).map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))?;
    file.write_all(b"\n").map_err(io_err(path))
}

pub fn import<T: Document>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    from_json(&text, path)
}

pub fn export_curve(curve: &RocCurve, path: impl AsRef<Path>) -> Result<()> {
    export(curve, path)
}

pub fn export_plan(plan: &TransportPlan, path: impl AsRef<Path>) -> Result<()> {
    export(plan, path)
}

pub fn export_classifier(rc: &RandomizedClassifier, path: impl AsRef<Path>) -> Result<()> {
    export(rc, path)
}

/// Path used in messages for in-memory input.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roc::empirical_roc;

    fn parse(text: &str) -> Result<GroupedScores> {
        parse_scores(text.as_bytes(), &memory_path())
    }

    #[test]
    fn parses_four_rows() {
        let data = parse("score,group,label\n0.9,0,1\n0.1,0,0\n0.8,1,1\n0.2,1,0\n").unwrap();
        assert_eq!(data.len(), 4);
    }

    #[test]
    fn crlf_accepted() {
        let data = parse("score,group,label\r\n0.9,0,1\r\n0.1,0,0\r\n0.8,1,1\r\n0.2,1,0\r\n").unwrap();
        assert_eq!(data.len(), 4);
    }

    #[test]
    fn bad_group_reports_line() {
        let err = parse("score,group,label\n0.9,0,1\n0.5,2,0\n").unwrap_err();
        match err {
            FrocError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("group"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(
            parse("s,g,l\n0.9,0,1\n").unwrap_err(),
            FrocError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn missing_cell_named() {
        let err = parse("score,group,label\n0.9,0,1\n0.1,0,0\n0.8,1,1\n").unwrap_err();
        assert!(matches!(err, FrocError::MissingCell { group: Group::One, label: false }));
    }

    #[test]
    fn min_max_normalization() {
        let data = parse("score,group,label\n-3,0,1\n7,0,0\n2,1,1\n2,1,0\n").unwrap();
        let scores: Vec<f64> = data.rows().iter().map(|r| r.score).collect();
        assert_eq!(scores, vec![0.0, 1.0, 0.5, 0.5]);
        let data = parse("score,group,label\n4,0,1\n4,0,0\n4,1,1\n4,1,0\n").unwrap();
        assert!(data.rows().iter().all(|r| r.score == 0.5));
    }

    fn cell(location: f64, scale: f64) -> LogisticCell {
        LogisticCell {
            location,
            scale,
            count: 500,
        }
    }

    fn spec(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            cells: [
                [cell(0.4, 0.1), cell(0.6, 0.08)],
                [cell(0.35, 0.12), cell(0.7, 0.05)],
            ],
            seed,
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let (a, _) = generate_synthetic(&spec(3)).unwrap();
        let (b, _) = generate_synthetic(&spec(3)).unwrap();
        let (c, _) = generate_synthetic(&spec(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_slope_bounds() {
        let b = spec(0).slope_bounds();
        assert_eq!(b.u_t, 1.0 / (4.0 * 0.05));
        assert_eq!(b.u_f, 1.0 / (4.0 * 0.1));
    }

    #[test]
    fn population_slopes_within_bounds() {
        let s = spec(0);
        let b = s.slope_bounds();
        for k in [10, 37, 200] {
            let grid = QueryGrid::new(k).unwrap();
            for g in Group::BOTH {
                let est = SlopeBounds::estimate(&population_roc(&s, g, &grid), &grid);
                assert!(est.u_t <= b.u_t + 1e-9 && est.u_f <= b.u_f + 1e-9);
            }
        }
    }

    #[test]
    fn identical_groups_have_matching_rocs() {
        let c = [cell(0.4, 0.1), cell(0.6, 0.1)];
        let s = SyntheticSpec {
            cells: [c, c],
            seed: 9,
        };
        let grid = QueryGrid::new(20).unwrap();
        assert_eq!(population_roc(&s, Group::Zero, &grid), population_roc(&s, Group::One, &grid));
        let (data, _) = generate_synthetic(&s).unwrap();
        let r0 = empirical_roc(&data, Group::Zero, &grid).unwrap();
        let r1 = empirical_roc(&data, Group::One, &grid).unwrap();
        for (p, q) in r0.points().iter().zip(r1.points()) {
            assert!((p.fpr - q.fpr).abs() < 0.15 && (p.tpr - q.tpr).abs() < 0.15);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let rows = synthetic_rows(&spec(1)).unwrap();
        write_scores(&path, &rows).unwrap();
        let back = parse_rows(File::open(&path).unwrap(), &path).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn json_round_trip_and_kind_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let c = RocCurve::new(vec![RocPoint::new(0.1, 0.1 + 1e-17), RocPoint::new(1.0 / 3.0, 0.7)]).unwrap();
        export_curve(&c, &path).unwrap();
        let back: RocCurve = import(&path).unwrap();
        assert_eq!(c, back);
        let err = import::<TransportPlan>(&path).unwrap_err();
        assert!(matches!(err, FrocError::WrongDocument { expected: "plan", .. }));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_scores("/nonexistent/scores.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/scores.csv"));
    }
}
