//! The four subcommands, callable as library functions.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cosearch::engine::{run_brute_force, run_search, SearchTrace, ThresholdOutcome};
use cosearch::metrics::{default_reference, gap_curve, hypervolume_2d, mean_gap, rank_table, GapCurvePoint, RankRow};
use cosearch::pareto::{pareto_front, ObjectivePoint};
use cosearch::simbench::GroundTruth;
use cosearch::space::{ArchId, SpaceIndex};
use cosearch::Exec;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::files::{
    read_result, write_csv, write_json, BenchmarkFile, OracleFile, Provenance, ResultFile, TraceFile,
    ORACLE_FORMAT, TRACE_FORMAT,
};

pub const BENCHMARK_FILE: &str = "benchmark.json";
pub const TRACE_FILE: &str = "trace.json";
pub const FRONT_FILE: &str = "front.csv";
pub const ORACLE_FILE: &str = "oracle.json";
pub const ORACLE_CSV: &str = "oracle.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RANK_FILE: &str = "rank_table.csv";
pub const GAP_FILE: &str = "gap_curve.csv";

pub fn generate_benchmark(config: &RunConfig, path: &Path, exec: Exec) -> Result<BenchmarkFile> {
    config.validate()?;
    let index = Arc::new(SpaceIndex::new(config.space_config()?)?);
    let truth = GroundTruth::generate(config.seed, index, &config.hardware_profile()?, exec)?;
    let file = BenchmarkFile::new(config, &truth)?;
    write_json(path, &file)?;
    Ok(file)
}

/// Reads the benchmark and refuses it unless it was built from this config.
fn load_truth(config: &RunConfig, benchmark: &Path) -> Result<GroundTruth> {
    let file = BenchmarkFile::read(benchmark)?;
    let expected = config.benchmark_hash()?;
    if file.provenance.benchmark_hash != expected {
        return Err(CliError::Provenance(format!(
            "{} was generated for benchmark {} (seed {}, profile {}); this config needs {expected}",
            benchmark.display(),
            file.provenance.benchmark_hash,
            file.provenance.seed,
            file.provenance.profile
        )));
    }
    file.truth()
}

#[derive(Debug, Serialize)]
struct FrontRow {
    arch_id: u32,
    resolution: u32,
    width_multiplier: f64,
    expansion_ratio: u32,
    stage_depths: String,
    accuracy: f64,
    latency_ms: f64,
}

fn front_rows(index: &SpaceIndex, front: &[ArchId], points: &[ObjectivePoint]) -> Vec<FrontRow> {
    front
        .iter()
        .filter_map(|&a| points.iter().find(|p| p.arch_id == a))
        .map(|p| {
            let arch = index.arch(p.arch_id);
            FrontRow {
                arch_id: p.arch_id.0,
                resolution: arch.resolution,
                width_multiplier: arch.width_multiplier,
                expansion_ratio: arch.expansion_ratio,
                stage_depths: arch.stage_depths.iter().map(u32::to_string).collect::<Vec<_>>().join("-"),
                accuracy: p.accuracy,
                latency_ms: p.latency,
            }
        })
        .collect()
}

/// Runs the search over the whole space and writes `trace.json` and
/// `front.csv` into `out_dir`. A threshold run with no feasible answer still
/// writes both files, then returns [`CliError::Infeasible`].
pub fn run(config: &RunConfig, benchmark: &Path, out_dir: &Path, exec: Exec) -> Result<TraceFile> {
    config.validate()?;
    let truth = load_truth(config, benchmark)?;
    let index = truth.shared_index();
    let mut opts = config.search_options(&index);
    opts.exec = exec;
    let outcome = run_search(&truth, &index.all_ids(), &opts, config.rule()?)?;
    let file = TraceFile {
        provenance: Provenance::new(TRACE_FORMAT, config)?,
        space: index.config().clone(),
        options: opts,
        trace: outcome.trace,
    };
    write_json(&out_dir.join(TRACE_FILE), &file)?;
    let rows = front_rows(&index, &file.trace.final_front, &file.trace.final_estimates);
    write_csv(&out_dir.join(FRONT_FILE), &file.provenance, &rows)?;
    if let Some(ThresholdOutcome { nu, answer: None }) = file.trace.threshold {
        return Err(CliError::Infeasible { nu });
    }
    Ok(file)
}

#[derive(Debug, Serialize)]
struct OracleCsvRow {
    arch_id: u32,
    flops: u64,
    accuracy: f64,
    latency_ms: f64,
    true_accuracy: f64,
    true_latency_ms: f64,
    on_true_front: bool,
    on_estimated_front: bool,
}

/// Fully evaluates every architecture; writes `oracle.json` and `oracle.csv`.
pub fn brute_force(config: &RunConfig, benchmark: &Path, out_dir: &Path, exec: Exec) -> Result<OracleFile> {
    config.validate()?;
    let truth = load_truth(config, benchmark)?;
    let index = truth.shared_index();
    let table = run_brute_force(&truth, &index.all_ids(), config.oracle, config.noise(), exec)?;
    let file = OracleFile {
        provenance: Provenance::new(ORACLE_FORMAT, config)?,
        space: index.config().clone(),
        unit: config.unit,
        table,
    };
    write_json(&out_dir.join(ORACLE_FILE), &file)?;
    let rows: Vec<OracleCsvRow> = file
        .table
        .rows
        .iter()
        .map(|r| OracleCsvRow {
            arch_id: r.arch_id.0,
            flops: r.flops,
            accuracy: r.accuracy,
            latency_ms: r.latency,
            true_accuracy: r.true_accuracy,
            true_latency_ms: r.true_latency,
            on_true_front: file.table.true_front.contains(&r.arch_id),
            on_estimated_front: file.table.estimated_front.contains(&r.arch_id),
        })
        .collect();
    write_csv(&out_dir.join(ORACLE_CSV), &file.provenance, &rows)?;
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeSummary {
    /// Reference point: accuracy 0, 1.1 x the slowest candidate.
    pub reference_latency_ms: f64,
    pub result: f64,
    pub oracle: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub result_units: u64,
    pub oracle_units: u64,
    /// Oracle units over result units.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub nu_ms: f64,
    pub answer: Option<u32>,
    pub answer_true_accuracy: Option<f64>,
    pub answer_true_latency_ms: Option<f64>,
    /// Best true accuracy among candidates whose true latency is within nu.
    pub best_feasible_true_accuracy: Option<f64>,
    /// Best feasible accuracy minus the answer's, in percentage points.
    pub accuracy_gap_pp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub oracle_config_hash: String,
    /// `trace` or `oracle`.
    pub result_kind: String,
    pub candidates: usize,
    pub hypervolume: HypervolumeSummary,
    pub rank_table: Vec<RankRow>,
    pub gap_curve: Vec<GapCurvePoint>,
    pub ledger: LedgerSummary,
    pub threshold: Option<ThresholdSummary>,
}

fn true_points(oracle: &OracleFile, ids: &[ArchId]) -> Result<Vec<ObjectivePoint>> {
    ids.iter()
        .map(|&a| {
            oracle
                .table
                .row(a)
                .map(|r| r.true_point())
                .ok_or_else(|| CliError::Provenance(format!("oracle table has no row for {a}")))
        })
        .collect()
}

/// Estimates at the end of the first round that used at least `fraction` of
/// the trace's final ledger.
fn latency_at(index: &SpaceIndex, trace: &SearchTrace, fraction: f64) -> Result<Vec<f64>> {
    let total = trace.ledger_units() as f64;
    let round = trace
        .rounds
        .iter()
        .find(|r| r.ledger_position as f64 >= fraction * total)
        .or(trace.rounds.last())
        .ok_or_else(|| CliError::config("trace has no rounds"))?;
    trace
        .candidates
        .iter()
        .map(|&a| {
            round
                .latency_estimate(index, a)
                .ok_or_else(|| CliError::config(format!("{a} has no latency estimate in the trace")))
        })
        .collect()
}

fn threshold_summary(outcome: &ThresholdOutcome, candidates: &[ObjectivePoint]) -> ThresholdSummary {
    let best = candidates
        .iter()
        .filter(|p| p.latency <= outcome.nu)
        .map(|p| p.accuracy)
        .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.max(a))));
    let answer = outcome.answer.and_then(|a| candidates.iter().find(|p| p.arch_id == a.arch_id));
    ThresholdSummary {
        nu_ms: outcome.nu,
        answer: answer.map(|p| p.arch_id.0),
        answer_true_accuracy: answer.map(|p| p.accuracy),
        answer_true_latency_ms: answer.map(|p| p.latency),
        best_feasible_true_accuracy: best,
        accuracy_gap_pp: best.zip(answer).map(|(b, p)| 100.0 * (b - p.accuracy)),
    }
}

/// Compares a search trace, or another oracle table, against an oracle.
/// Writes `summary.json`, `rank_table.csv` and `gap_curve.csv` into `out_dir`.
pub fn report(result_path: &Path, oracle_path: &Path, out_dir: &Path) -> Result<Report> {
    let result = read_result(result_path)?;
    let oracle = OracleFile::read(oracle_path)?;
    let ours = result.provenance();
    if ours.benchmark_hash != oracle.provenance.benchmark_hash {
        return Err(CliError::Provenance(format!(
            "{} is from benchmark {} (seed {}, profile {}) but {} is from {} (seed {}, profile {})",
            result_path.display(),
            ours.benchmark_hash,
            ours.seed,
            ours.profile,
            oracle_path.display(),
            oracle.provenance.benchmark_hash,
            oracle.provenance.seed,
            oracle.provenance.profile
        )));
    }
    let index = SpaceIndex::new(oracle.space.clone())?;

    let (kind, candidates, found_front, gaps, unit, result_units, threshold) = match &result {
        ResultFile::Trace(t) => {
            let trace = &t.trace;
            (
                "trace",
                trace.candidates.clone(),
                trace.final_front.clone(),
                gap_curve(trace, &oracle.table)?,
                trace.unit,
                trace.ledger_units(),
                trace.threshold.clone(),
            )
        }
        ResultFile::Oracle(o) => {
            // A full evaluation has found everything; it reports the true front.
            let ids: Vec<ArchId> = o.table.rows.iter().map(|r| r.arch_id).collect();
            let units = o.table.ledger_units(&o.unit);
            let front = pareto_front(&true_points(&oracle, &ids)?)?;
            let gap = mean_gap(&true_points(&oracle, &front)?, &true_points(&oracle, &ids)?);
            ("oracle", ids, front, vec![GapCurvePoint { ledger_position: units, mean_gap: gap }], o.unit, units, None)
        }
    };

    let candidate_points = true_points(&oracle, &candidates)?;
    let oracle_front = pareto_front(&candidate_points)?;
    let reference = default_reference(&candidate_points);
    let hv_result = hypervolume_2d(&true_points(&oracle, &found_front)?, &reference)?;
    let hv_oracle = hypervolume_2d(&true_points(&oracle, &oracle_front)?, &reference)?;

    let true_latency: Vec<f64> = candidate_points.iter().map(|p| p.latency).collect();
    let flops: Vec<f64> = candidates.iter().map(|&a| index.flops(a) as f64).collect();
    let oracle_estimate: Vec<f64> =
        candidates.iter().map(|&a| oracle.table.row(a).expect("checked above").latency).collect();
    let mut estimators: Vec<(&str, Vec<f64>)> = vec![("flops", flops)];
    if let ResultFile::Trace(t) = &result {
        estimators.push(("search_half_ledger", latency_at(&index, &t.trace, 0.5)?));
        estimators.push(("search_final", latency_at(&index, &t.trace, 1.0)?));
    }
    estimators.push(("oracle_estimate", oracle_estimate));
    let named: Vec<(&str, &[f64])> = estimators.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    let ranks = rank_table(&true_latency, &named)?;

    let oracle_units = oracle.table.ledger_units(&unit);
    let report = Report {
        provenance: ours.clone(),
        oracle_config_hash: oracle.provenance.config_hash.clone(),
        result_kind: kind.into(),
        candidates: candidates.len(),
        hypervolume: HypervolumeSummary {
            reference_latency_ms: reference.latency,
            result: hv_result,
            oracle: hv_oracle,
            ratio: hv_result / hv_oracle,
        },
        rank_table: ranks,
        gap_curve: gaps,
        ledger: LedgerSummary { result_units, oracle_units, speedup: oracle_units as f64 / result_units as f64 },
        threshold: threshold.map(|t| threshold_summary(&t, &candidate_points)),
    };

    write_json(&out_dir.join(SUMMARY_FILE), &report)?;
    write_csv(&out_dir.join(RANK_FILE), &report.provenance, &report.rank_table)?;
    write_csv(&out_dir.join(GAP_FILE), &report.provenance, &report.gap_curve)?;
    Ok(report)
}

/// Default benchmark location for a config.
pub fn default_benchmark_path(config: &RunConfig) -> PathBuf {
    config.output_dir.join(BENCHMARK_FILE)
}
