//! `froc`: equalized-ROC post-processing from the command line.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use froc_core::data_io::{self, export, LogisticCell, SyntheticSpec};
use froc_core::pipeline::{self, DEFAULT_DRAWS};
use froc_core::{
    interpolate, optimality_report, FrocError, GroupedScores, QueryGrid, RocCurve, Tolerance,
    TransportOptions,
};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const UNFAIR: u8 = 3;
const INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "froc", version, about = "Equalize group ROC curves by transporting the upper one")]
struct Cli {
    /// Predicate tolerance for geometric tests.
    #[arg(long, env = "FROC_TOLERANCE", global = true)]
    tolerance: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write both group ROC curves and a plotting CSV.
    Roc(Common),
    /// Transport the upper curve and verify fairness.
    Transport(Transport),
    /// Build the randomized classifier realizing the fair curves.
    Classify(Transport),
    /// Monte Carlo evaluation of the randomized classifier.
    Evaluate(Evaluate),
    /// AUC loss, accuracy and disparate impact over a range of epsilon.
    Sweep(Sweep),
    /// Compare the transport against the exhaustive oracle (k <= 25).
    OracleCompare(Oracle),
    /// Write a synthetic score file with a group bias.
    GenSynthetic(GenSynthetic),
}

#[derive(Args)]
struct Common {
    /// Score CSV with header score,group,label.
    #[arg(long)]
    input: PathBuf,
    /// Number of equidistant thresholds.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct Transport {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    eps: f64,
    /// Lower fair TPRs to restore monotonicity after shifting.
    #[arg(long)]
    repair_monotone: bool,
}

#[derive(Args)]
struct Evaluate {
    #[command(flatten)]
    transport: Transport,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Predictions per group and threshold.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.01)]
    eps_start: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_stop: f64,
    #[arg(long, default_value_t = 10)]
    eps_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long)]
    repair_monotone: bool,
}

#[derive(Args)]
struct Oracle {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    eps: f64,
    /// Candidate spacing along each norm-ball edge.
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Only consider candidates on the norm-ball boundary.
    #[arg(long)]
    boundary_only: bool,
}

#[derive(Args)]
struct GenSynthetic {
    /// Output directory; the file is written as scores.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per (group, label) cell for the built-in biased preset.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// JSON synthetic spec replacing the preset.
    #[arg(long)]
    spec: Option<PathBuf>,
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<FrocError>() {
            Some(FrocError::Infeasible { .. }) => INFEASIBLE,
            Some(
                FrocError::InvalidK
                | FrocError::InvalidEpsilon(_)
                | FrocError::InvalidDelta { .. }
                | FrocError::OracleTooLarge { .. },
            ) => USAGE,
            _ => DATA,
        };
        Failure { code, error }
    }
}

impl From<FrocError> for Failure {
    fn from(e: FrocError) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        error: anyhow::anyhow!(msg.into()),
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let mut tolerance = Tolerance::default();
    if let Some(t) = cli.tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(usage(format!("FROC_TOLERANCE must be a nonnegative number, got {t}")));
        }
        tolerance = Tolerance::with_predicate(t);
    }
    let options = |repair_monotone| TransportOptions {
        repair_monotone,
        tolerance,
        ..TransportOptions::default()
    };
    match cli.command {
        Command::Roc(c) => cmd_roc(&c),
        Command::Transport(t) => cmd_transport(&t, options(t.repair_monotone)),
        Command::Classify(t) => cmd_classify(&t, options(t.repair_monotone)),
        Command::Evaluate(e) => cmd_evaluate(&e, options(e.transport.repair_monotone)),
        Command::Sweep(s) => cmd_sweep(&s, options(s.repair_monotone)),
        Command::OracleCompare(o) => cmd_oracle(&o),
        Command::GenSynthetic(g) => cmd_gen(&g),
    }
}

fn check_eps(eps: f64) -> Result<(), Failure> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--eps must be positive, got {eps}")))
    }
}

/// Loads the scores, builds the grid and makes sure the output directory exists.
fn prepare(c: &Common) -> Result<(GroupedScores, QueryGrid), Failure> {
    let grid = QueryGrid::new(c.k).map_err(|_| usage("--k must be at least 1"))?;
    let data = data_io::load_scores(&c.input)?;
    fs::create_dir_all(&c.out)
        .with_context(|| format!("creating output directory {}", c.out.display()))?;
    Ok((data, grid))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, Failure> {
    Ok(csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?)
}

fn finish_csv(mut w: csv::Writer<File>, path: &Path) -> Result<(), Failure> {
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_roc(c: &Common) -> Outcome {
    let (data, grid) = prepare(c)?;
    let curves = pipeline::group_curves(&data, &grid)?;
    for (g, curve) in curves.iter().enumerate() {
        export(curve, c.out.join(format!("roc_group{g}.json")))?;
    }
    let path = c.out.join("roc_plot.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["alpha", "tpr0", "tpr1", "gap"]).context("writing CSV")?;
    for j in 0..=100 {
        let alpha = j as f64 / 100.0;
        let (t0, t1) = (interpolate(&curves[0], alpha), interpolate(&curves[1], alpha));
        w.serialize((alpha, t0, t1, (t1 - t0).abs())).context("writing CSV")?;
    }
    finish_csv(w, &path)?;
    println!("initial max gap {:.6}", pipeline::initial_gap(&curves));
    Ok(0)
}

#[derive(Serialize)]
struct TransportSummary<'a> {
    eps: f64,
    up_group: froc_core::Group,
    warning: &'a Option<String>,
    fairness: froc_core::FairnessReport,
    auc_loss: f64,
}

fn transport_run(t: &Transport, options: TransportOptions) -> Result<pipeline::PipelineRun, Failure> {
    check_eps(t.eps)?;
    let (data, grid) = prepare(&t.common)?;
    let run = pipeline::run(&data, grid, t.eps, options)?;
    if let Some(w) = &run.orientation.warning {
        eprintln!("warning: {w}");
    }
    let out = &t.common.out;
    export(&run.plan, out.join("plan.json"))?;
    write_json(
        &out.join("fairness.json"),
        &TransportSummary {
            eps: t.eps,
            up_group: run.up_group(),
            warning: &run.orientation.warning,
            fairness: run.fairness,
            auc_loss: run.auc_loss,
        },
    )?;
    println!(
        "up group {}, max index gap {:.6} (eps {}), auc loss {:.6}: {}",
        run.up_group(),
        run.fairness.max_index_gap,
        t.eps,
        run.auc_loss,
        if run.fairness.pass { "pass" } else { "FAIL" }
    );
    Ok(run)
}

fn fairness_code(run: &pipeline::PipelineRun) -> u8 {
    if run.fairness.pass {
        0
    } else {
        UNFAIR
    }
}

fn cmd_transport(t: &Transport, options: TransportOptions) -> Outcome {
    let run = transport_run(t, options)?;
    Ok(fairness_code(&run))
}

fn cmd_classify(t: &Transport, options: TransportOptions) -> Outcome {
    let run = transport_run(t, options)?;
    export(&run.classifier, t.common.out.join("classifier.json"))?;
    Ok(fairness_code(&run))
}

fn cmd_evaluate(e: &Evaluate, options: TransportOptions) -> Outcome {
    let t = &e.transport;
    if e.draws == 0 {
        return Err(usage("--draws must be positive"));
    }
    let run = transport_run(t, options)?;
    let data = data_io::load_scores(&t.common.input)?;
    let ev = pipeline::evaluate(&run.classifier, &data, e.draws, e.seed);
    let path = t.common.out.join("evaluation.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["position", "threshold", "group", "fpr", "tpr", "positive_rate", "accuracy"])
        .context("writing CSV")?;
    for p in 1..=run.grid.k() {
        for g in froc_core::Group::BOTH {
            let s = ev.stats[g.index()][p - 1];
            w.serialize((
                p,
                run.grid.threshold_at_position(p),
                u8::from(g),
                s.fpr(),
                s.tpr(),
                s.positive_rate(),
                ev.accuracy[p - 1],
            ))
            .context("writing CSV")?;
        }
    }
    finish_csv(w, &path)?;
    let best = ev.best_position();
    println!(
        "best threshold {} accuracy {:.4}, disparate impact {:.4}",
        run.grid.threshold_at_position(best),
        ev.accuracy[best - 1],
        ev.disparate_impact(best)
    );
    Ok(fairness_code(&run))
}

fn cmd_sweep(s: &Sweep, options: TransportOptions) -> Outcome {
    let eps = pipeline::eps_grid(s.eps_start, s.eps_stop, s.eps_steps).map_err(|e| usage(e.to_string()))?;
    if s.draws == 0 {
        return Err(usage("--draws must be positive"));
    }
    let (data, grid) = prepare(&s.common)?;
    let rows = pipeline::sweep(&data, grid, &eps, options, s.draws, s.seed)?;
    let path = s.common.out.join("sweep.csv");
    let mut w = csv_writer(&path)?;
    for r in &rows {
        w.serialize(r).context("writing CSV")?;
    }
    finish_csv(w, &path)?;
    let (_, base) = pipeline::baseline_best_accuracy(&data, grid);
    println!("baseline accuracy {base:.4}; {} rows written to {}", rows.len(), path.display());
    Ok(if rows.iter().all(|r| r.max_gap <= r.eps + Tolerance::default().assertion) {
        0
    } else {
        UNFAIR
    })
}

fn cmd_oracle(o: &Oracle) -> Outcome {
    check_eps(o.eps)?;
    let (data, grid) = prepare(&o.common)?;
    let curves = pipeline::group_curves(&data, &grid)?;
    let up = pipeline::orient(&curves)?.up_group;
    let (roc_up, roc_down): (&RocCurve, &RocCurve) = (&curves[up.index()], &curves[up.other().index()]);
    let report = optimality_report(roc_up, roc_down, o.eps, o.delta, o.boundary_only)?;
    write_json(&o.common.out.join("oracle_report.json"), &report)?;
    println!(
        "transport auc {:.6}, oracle auc {:.6}, gap {:.6}, assumptions hold: {}",
        report.froc_auc, report.oracle_auc, report.gap, report.assumptions_hold
    );
    Ok(0)
}

/// Group 1 scores are squeezed toward the middle, so its ROC sits below
/// group 0's.
fn biased_preset(n: usize, seed: u64) -> SyntheticSpec {
    let cell = |location, scale| LogisticCell {
        location,
        scale,
        count: n,
    };
    SyntheticSpec {
        cells: [
            [cell(0.35, 0.08), cell(0.65, 0.08)],
            [cell(0.375, 0.08), cell(0.625, 0.08)],
        ],
        seed,
    }
}

fn cmd_gen(g: &GenSynthetic) -> Outcome {
    let spec = match &g.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut spec: SyntheticSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            spec.seed = g.seed;
            spec
        }
        None => {
            if g.n == 0 {
                return Err(usage("--n must be positive"));
            }
            biased_preset(g.n, g.seed)
        }
    };
    let rows = data_io::synthetic_rows(&spec)?;
    fs::create_dir_all(&g.out).with_context(|| format!("creating output directory {}", g.out.display()))?;
    let path = g.out.join("scores.csv");
    data_io::write_scores(&path, &rows)?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: FrocError| Failure::from(e).code;
        assert_eq!(code(FrocError::Infeasible { index: 2 }), INFEASIBLE);
        assert_eq!(code(FrocError::InvalidEpsilon(0.0)), USAGE);
        assert_eq!(code(FrocError::OracleTooLarge { k: 30, max: 25 }), USAGE);
        assert_eq!(code(FrocError::EmptyDataset), DATA);
        let wrapped = anyhow::Error::from(FrocError::Infeasible { index: 1 }).context("oracle");
        assert_eq!(Failure::from(wrapped).code, INFEASIBLE);
    }
}
