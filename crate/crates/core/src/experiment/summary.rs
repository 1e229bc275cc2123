use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::ExperimentMatrix;
use super::record::RunRecord;
use super::runner::{load_records, record_json};
use crate::error::Result;
use crate::stats::{wilcoxon_ranksum, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    /// Mean, sample standard deviation (0 for a single value), min and max.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub problem: String,
    pub runs: usize,
    pub igd: MetricStats,
    pub ihv_minus: MetricStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Igd,
    IhvMinus,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Igd => "igd",
            Metric::IhvMinus => "ihv_minus",
        }
    }

    fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Igd => r.final_igd,
            Metric::IhvMinus => r.final_ihv_minus,
        }
    }
}

/// Rank-sum verdict of a CPS variant against its baseline on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub cps: String,
    pub baseline: String,
    pub problem: String,
    pub metric: Metric,
    pub verdict: Verdict,
    pub p_value: f64,
    pub exact: bool,
    pub paired_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub cps: String,
    pub baseline: String,
    pub metric: Metric,
    pub plus: usize,
    pub minus: usize,
    pub tilde: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub fes: u64,
    pub mean_igd: f64,
    pub mean_ihv_minus: f64,
    pub mean_nd_fraction: Option<f64>,
}

/// Mean evaluations needed to bring IGD to or below a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FesToTarget {
    pub algorithm: String,
    pub problem: String,
    pub threshold: f64,
    /// Runs that never reach the threshold count with their full budget.
    pub mean_fes: f64,
    pub reached: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub verdicts: Vec<VerdictRow>,
    pub tallies: Vec<Tally>,
    pub traces: BTreeMap<(String, String), Vec<TraceRow>>,
    pub fes_to_target: Vec<FesToTarget>,
    pub warnings: Vec<String>,
}

/// Pairs every CPS algorithm with the first baseline (by name) of the same kind.
pub fn baseline_pairs(records: &[RunRecord]) -> Vec<(String, String)> {
    let mut kinds: BTreeMap<&str, (bool, crate::algorithms::AlgorithmKind)> = BTreeMap::new();
    for r in records {
        kinds.insert(&r.algorithm, (r.config.cps_enabled, r.config.kind));
    }
    kinds
        .iter()
        .filter(|(_, (cps, _))| *cps)
        .filter_map(|(name, (_, kind))| {
            kinds
                .iter()
                .find(|(_, (cps, k))| !*cps && k == kind)
                .map(|(base, _)| (name.to_string(), base.to_string()))
        })
        .collect()
}

fn group(records: &[RunRecord]) -> BTreeMap<(String, String), Vec<&RunRecord>> {
    let mut groups: BTreeMap<(String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.algorithm.clone(), r.problem.clone())).or_default().push(r);
    }
    for runs in groups.values_mut() {
        runs.sort_by_key(|r| r.seed);
    }
    groups
}

fn mean_trace(runs: &[&RunRecord], warnings: &mut Vec<String>, key: &(String, String)) -> Vec<TraceRow> {
    let grid: Vec<u64> = runs[0].trace.iter().map(|t| t.fes).collect();
    let usable: Vec<&&RunRecord> =
        runs.iter().filter(|r| r.trace.iter().map(|t| t.fes).eq(grid.iter().copied())).collect();
    if usable.len() != runs.len() {
        warnings.push(format!(
            "{} on {}: {} runs with a different checkpoint grid left out of the mean trace",
            key.0,
            key.1,
            runs.len() - usable.len()
        ));
    }
    let n = usable.len() as f64;
    grid.iter()
        .enumerate()
        .map(|(i, &fes)| {
            let fractions: Vec<f64> = usable.iter().filter_map(|r| r.trace[i].cps_nondominated_fraction).collect();
            TraceRow {
                fes,
                mean_igd: usable.iter().map(|r| r.trace[i].igd).sum::<f64>() / n,
                mean_ihv_minus: usable.iter().map(|r| r.trace[i].ihv_minus).sum::<f64>() / n,
                mean_nd_fraction: (!fractions.is_empty())
                    .then(|| fractions.iter().sum::<f64>() / fractions.len() as f64),
            }
        })
        .collect()
}

/// First checkpoint at which IGD is at or below `threshold`.
pub fn fes_to_reach(record: &RunRecord, threshold: f64) -> Option<u64> {
    record.trace.iter().find(|t| t.igd <= threshold).map(|t| t.fes)
}

/// Builds every summary table from raw records.
pub fn summarize(records: &[RunRecord], thresholds: &[f64], alpha: f64) -> Summary {
    let mut summary = Summary::default();
    let groups = group(records);
    for (key, runs) in &groups {
        let igd: Vec<f64> = runs.iter().map(|r| r.final_igd).collect();
        let ihv: Vec<f64> = runs.iter().map(|r| r.final_ihv_minus).collect();
        summary.rows.push(SummaryRow {
            algorithm: key.0.clone(),
            problem: key.1.clone(),
            runs: runs.len(),
            igd: MetricStats::of(&igd),
            ihv_minus: MetricStats::of(&ihv),
        });
        let trace = mean_trace(runs, &mut summary.warnings, key);
        summary.traces.insert(key.clone(), trace);
        for &threshold in thresholds {
            let hits: Vec<Option<u64>> = runs.iter().map(|r| fes_to_reach(r, threshold)).collect();
            let total: u64 = hits.iter().zip(runs).map(|(h, r)| h.unwrap_or(r.max_fes)).sum();
            let reached = hits.iter().filter(|h| h.is_some()).count();
            summary.fes_to_target.push(FesToTarget {
                algorithm: key.0.clone(),
                problem: key.1.clone(),
                threshold,
                mean_fes: total as f64 / runs.len() as f64,
                reached,
                censored: runs.len() - reached,
            });
        }
    }

    let problems: BTreeSet<&String> = groups.keys().map(|(_, p)| p).collect();
    for (cps, baseline) in baseline_pairs(records) {
        for metric in [Metric::Igd, Metric::IhvMinus] {
            let mut tally = Tally { cps: cps.clone(), baseline: baseline.clone(), metric, plus: 0, minus: 0, tilde: 0 };
            for &problem in &problems {
                let (Some(a), Some(b)) =
                    (groups.get(&(cps.clone(), problem.clone())), groups.get(&(baseline.clone(), problem.clone())))
                else {
                    if metric == Metric::Igd {
                        summary.warnings.push(format!("{problem}: missing cells for {cps} or {baseline}"));
                    }
                    continue;
                };
                let seeds_b: BTreeMap<u64, &RunRecord> = b.iter().map(|r| (r.seed, *r)).collect();
                let paired: Vec<(&RunRecord, &RunRecord)> =
                    a.iter().filter_map(|r| seeds_b.get(&r.seed).map(|s| (*r, *s))).collect();
                if metric == Metric::Igd && (paired.len() != a.len() || paired.len() != b.len()) {
                    summary.warnings.push(format!("{problem}: {cps} and {baseline} share only {} seeds", paired.len()));
                }
                let xa: Vec<f64> = paired.iter().map(|(r, _)| metric.of(r)).collect();
                let xb: Vec<f64> = paired.iter().map(|(_, r)| metric.of(r)).collect();
                match wilcoxon_ranksum(&xa, &xb, alpha) {
                    Ok(v) => {
                        match v.verdict {
                            Verdict::Plus => tally.plus += 1,
                            Verdict::Minus => tally.minus += 1,
                            Verdict::Tilde => tally.tilde += 1,
                        }
                        summary.verdicts.push(VerdictRow {
                            cps: cps.clone(),
                            baseline: baseline.clone(),
                            problem: problem.clone(),
                            metric,
                            verdict: v.verdict,
                            p_value: v.p_value,
                            exact: v.exact,
                            paired_runs: paired.len(),
                        });
                    }
                    Err(e) => summary.warnings.push(format!("{problem}: {cps} vs {baseline} on {}: {e}", metric.as_str())),
                }
            }
            summary.tallies.push(tally);
        }
    }
    summary
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

fn safe(name: &str) -> String {
    name.replace(['/', '\\'], "-")
}

/// Writes `summary.csv`, `verdicts.csv`, `fes_to_target.csv`, the
/// `trace_<alg>_<prob>.csv` curves and the `snapshots/` populations into `dir`.
pub fn write_summary(summary: &Summary, records: &[RunRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record([
        "algorithm", "problem", "runs", "igd_mean", "igd_std", "igd_min", "igd_max", "ihv_minus_mean", "ihv_minus_std",
        "ihv_minus_min", "ihv_minus_max",
    ])?;
    for r in &summary.rows {
        let (a, b) = (r.igd, r.ihv_minus);
        w.write_record([
            r.algorithm.clone(),
            r.problem.clone(),
            r.runs.to_string(),
            f(a.mean),
            f(a.std),
            f(a.min),
            f(a.max),
            f(b.mean),
            f(b.std),
            f(b.min),
            f(b.max),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("verdicts.csv"))?;
    w.write_record(["cps", "baseline", "problem", "metric", "verdict", "p_value", "exact", "paired_runs"])?;
    for v in &summary.verdicts {
        w.write_record([
            v.cps.clone(),
            v.baseline.clone(),
            v.problem.clone(),
            v.metric.as_str().to_string(),
            v.verdict.symbol().to_string(),
            f(v.p_value),
            v.exact.to_string(),
            v.paired_runs.to_string(),
        ])?;
    }
    for t in &summary.tallies {
        w.write_record([
            t.cps.clone(),
            t.baseline.clone(),
            "+/-/~".to_string(),
            t.metric.as_str().to_string(),
            format!("{}/{}/{}", t.plus, t.minus, t.tilde),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("fes_to_target.csv"))?;
    w.write_record(["algorithm", "problem", "threshold", "mean_fes", "reached_runs", "censored_runs"])?;
    for t in &summary.fes_to_target {
        w.write_record([
            t.algorithm.clone(),
            t.problem.clone(),
            f(t.threshold),
            format!("{:.1}", t.mean_fes),
            t.reached.to_string(),
            t.censored.to_string(),
        ])?;
    }
    w.flush()?;

    for ((alg, prob), rows) in &summary.traces {
        let mut w = csv::Writer::from_path(dir.join(format!("trace_{}_{}.csv", safe(alg), safe(prob))))?;
        w.write_record(["fes", "mean_igd", "mean_ihv_minus", "mean_nd_fraction"])?;
        for r in rows {
            w.write_record([
                r.fes.to_string(),
                f(r.mean_igd),
                f(r.mean_ihv_minus),
                r.mean_nd_fraction.map(f).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }

    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for ((alg, prob), runs) in group(records) {
        let Some(m) = runs.iter().flat_map(|r| &r.snapshots).flat_map(|s| &s.population).find_map(|i| i.f.as_ref().map(Vec::len))
        else {
            continue;
        };
        let mut w = csv::Writer::from_path(snap_dir.join(format!("{}_{}.csv", safe(&alg), safe(&prob))))?;
        let mut header = vec!["seed".to_string(), "fraction".to_string(), "fes".to_string()];
        header.extend((1..=m).map(|j| format!("f_{j}")));
        w.write_record(&header)?;
        for r in runs {
            for s in &r.snapshots {
                for ind in &s.population {
                    let mut row = vec![r.seed.to_string(), s.fraction.to_string(), s.fes.to_string()];
                    row.extend(ind.objectives().iter().map(|v| v.to_string()));
                    w.write_record(&row)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Loads the records under `dir`, summarizes them with the thresholds and
/// level of the stored matrix (or the defaults) and writes the tables into `dir`.
pub fn summarize_dir(dir: &Path) -> Result<Summary> {
    let records = load_records(dir)?;
    let (thresholds, alpha) = match ExperimentMatrix::load(&dir.join("matrix.json")) {
        Ok(m) => (m.igd_thresholds, m.alpha),
        Err(_) => (vec![1e-1, 5e-2, 1e-2, 5e-3], 0.05),
    };
    let summary = summarize(&records, &thresholds, alpha);
    for w in &summary.warnings {
        log::warn!("{w}");
    }
    write_summary(&summary, &records, dir)?;
    Ok(summary)
}

/// One (algorithm, problem) cell compared across two result directories.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub algorithm: String,
    pub problem: String,
    pub common_runs: usize,
    pub identical_runs: usize,
    pub mean_igd_a: f64,
    pub mean_igd_b: f64,
    /// Rank-sum verdict of A against B on final IGD, when both have 3+ runs.
    pub verdict: Option<Verdict>,
}

/// Compares the records of two result directories cell by cell.
pub fn compare_dirs(a: &Path, b: &Path, alpha: f64) -> Result<Vec<CompareRow>> {
    let ra = load_records(a)?;
    let rb = load_records(b)?;
    let ga = group(&ra);
    let gb = group(&rb);
    let mut rows = Vec::new();
    for (key, runs_a) in &ga {
        let Some(runs_b) = gb.get(key) else { continue };
        let by_seed: BTreeMap<u64, &RunRecord> = runs_b.iter().map(|r| (r.seed, *r)).collect();
        let mut common = 0;
        let mut identical = 0;
        for r in runs_a {
            if let Some(s) = by_seed.get(&r.seed) {
                common += 1;
                if record_json(r)? == record_json(s)? {
                    identical += 1;
                }
            }
        }
        let igd_a: Vec<f64> = runs_a.iter().map(|r| r.final_igd).collect();
        let igd_b: Vec<f64> = runs_b.iter().map(|r| r.final_igd).collect();
        rows.push(CompareRow {
            algorithm: key.0.clone(),
            problem: key.1.clone(),
            common_runs: common,
            identical_runs: identical,
            mean_igd_a: MetricStats::of(&igd_a).mean,
            mean_igd_b: MetricStats::of(&igd_b).mean,
            verdict: wilcoxon_ranksum(&igd_a, &igd_b, alpha).ok().map(|v| v.verdict),
        });
    }
    Ok(rows)
}
