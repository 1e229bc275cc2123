use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{record_stem, Cell, ExperimentMatrix};
use super::record::{execute_run, ReferenceData, RunOptions, RunRecord};
use crate::error::{invalid_config, Error, Result};
use crate::problems::{Problem, ProblemRegistry};

/// How to execute a matrix.
#[derive(Debug, Clone)]
pub struct RunnerOptions {
    pub parallelism: usize,
    /// Output directory; records are written to `<out>/records/` as they finish.
    pub out_dir: Option<PathBuf>,
    /// Recompute cells whose record already exists instead of loading it.
    pub overwrite: bool,
    /// Dump each CPS run's training archives to `<out>/archives/`.
    pub dump_archives: bool,
}

impl Default for RunnerOptions {
    fn default() -> Self {
        Self { parallelism: 1, out_dir: None, overwrite: false, dump_archives: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub seconds: f64,
}

/// Result of a matrix execution, sorted by (algorithm, problem, seed).
#[derive(Debug, Clone, Default)]
pub struct MatrixOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<CellFailure>,
    pub timings: Vec<CellTiming>,
    /// Cells loaded from existing records instead of being run.
    pub reused: usize,
}

impl MatrixOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Serializes a record exactly as it is stored on disk.
pub fn record_json(record: &RunRecord) -> Result<String> {
    Ok(serde_json::to_string(record)?)
}

pub fn records_dir(out: &Path) -> PathBuf {
    out.join("records")
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads every `*.json` record under `<dir>/records`, sorted by (algorithm, problem, seed).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let rdir = records_dir(dir);
    if !rdir.is_dir() {
        return Err(Error::InvalidInput(format!("{} has no records directory", dir.display())));
    }
    let mut records = Vec::new();
    for entry in fs::read_dir(&rdir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            records.push(serde_json::from_str::<RunRecord>(&fs::read_to_string(&path)?)?);
        }
    }
    sort_records(&mut records);
    Ok(records)
}

pub(crate) fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| (&a.algorithm, &a.problem, a.seed).cmp(&(&b.algorithm, &b.problem, b.seed)));
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "run panicked".to_string())
}

/// Executes every cell of `matrix`.
///
/// Cells run concurrently on `parallelism` threads and share nothing but
/// read-only reference fronts, so every record is independent of scheduling.
/// A failing cell is reported in the outcome without stopping the others.
pub fn run_matrix(matrix: &ExperimentMatrix, options: &RunnerOptions) -> Result<MatrixOutcome> {
    matrix.validate()?;
    if options.parallelism == 0 {
        return Err(invalid_config("parallelism must be at least 1"));
    }
    let registry = ProblemRegistry::default();
    let mut problems: Vec<Arc<dyn Problem>> = Vec::new();
    let mut references: Vec<Arc<ReferenceData>> = Vec::new();
    for spec in &matrix.problems {
        let p = registry.create(&spec.name, spec.n_vars)?;
        references.push(Arc::new(ReferenceData::for_problem(p.as_ref(), matrix.reference_points)?));
        problems.push(p);
    }
    if let Some(out) = &options.out_dir {
        fs::create_dir_all(records_dir(out))?;
        if options.dump_archives {
            fs::create_dir_all(out.join("archives"))?;
        }
        write_atomic(&out.join("matrix.json"), matrix.to_json()?.as_bytes())?;
    }

    let run_cell = |cell: &Cell| -> (Option<RunRecord>, Option<CellFailure>, Option<CellTiming>, bool) {
        let entry = &matrix.algorithms[cell.algorithm];
        let spec = &matrix.problems[cell.problem];
        let stem = record_stem(&entry.name, &spec.name, cell.seed);
        let path = options.out_dir.as_ref().map(|o| records_dir(o).join(format!("{stem}.json")));
        let fail = |error: String| CellFailure {
            algorithm: entry.name.clone(),
            problem: spec.name.clone(),
            seed: cell.seed,
            error,
        };
        if let Some(p) = path.as_ref().filter(|p| p.exists() && !options.overwrite) {
            return match fs::read_to_string(p).map_err(Error::from).and_then(|t| Ok(serde_json::from_str(&t)?)) {
                Ok(rec) => (Some(rec), None, None, true),
                Err(e) => (None, Some(fail(format!("unreadable existing record: {e}"))), None, false),
            };
        }
        let cfg = matrix.config_for(entry, spec);
        let run_options = RunOptions {
            checkpoints: matrix.checkpoints.clone(),
            instrumentation: matrix.instrumentation,
            archive_csv: match (&options.out_dir, options.dump_archives && cfg.cps_enabled) {
                (Some(o), true) => Some(o.join("archives").join(format!("{stem}.csv"))),
                _ => None,
            },
        };
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| {
            execute_run(&cfg, problems[cell.problem].as_ref(), spec.max_fes, cell.seed, references[cell.problem].clone(), &run_options)
        }));
        let seconds = started.elapsed().as_secs_f64();
        let mut record = match result {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => return (None, Some(fail(e.to_string())), None, false),
            Err(payload) => return (None, Some(fail(panic_message(payload))), None, false),
        };
        record.algorithm = entry.name.clone();
        if let Some(p) = &path {
            if let Err(e) = record_json(&record).and_then(|j| write_atomic(p, j.as_bytes())) {
                return (None, Some(fail(format!("writing record: {e}"))), None, false);
            }
        }
        let timing = CellTiming { algorithm: entry.name.clone(), problem: spec.name.clone(), seed: cell.seed, seconds };
        log::info!("{stem}: final IGD {:.3e} in {seconds:.1}s", record.final_igd);
        (Some(record), None, Some(timing), false)
    };

    let cells = matrix.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results: Vec<_> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let mut outcome = MatrixOutcome::default();
    for (record, failure, timing, reused) in results {
        outcome.records.extend(record);
        outcome.failures.extend(failure);
        outcome.timings.extend(timing);
        outcome.reused += reused as usize;
    }
    sort_records(&mut outcome.records);

    if let Some(out) = &options.out_dir {
        if !outcome.timings.is_empty() {
            write_timings(&out.join("timings.csv"), &outcome.timings)?;
        }
        let failures_path = out.join("failures.json");
        if outcome.failures.is_empty() {
            if failures_path.exists() {
                fs::remove_file(&failures_path)?;
            }
        } else {
            write_atomic(&failures_path, serde_json::to_string_pretty(&outcome.failures)?.as_bytes())?;
        }
    }
    Ok(outcome)
}

fn write_timings(path: &Path, timings: &[CellTiming]) -> Result<()> {
    let mut sorted: BTreeMap<(&str, &str, u64), f64> = BTreeMap::new();
    for t in timings {
        sorted.insert((&t.algorithm, &t.problem, t.seed), t.seconds);
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["algorithm", "problem", "seed", "seconds"])?;
    for ((a, p, s), secs) in sorted {
        w.write_record([a.to_string(), p.to_string(), s.to_string(), format!("{secs:.3}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentMatrix {
        ExperimentMatrix::from_json(
            r#"{"name":"tiny","reference_points":200,
                "algorithms":[{"name":"rmmeda","config":{"kind":"rmmeda","population_size":20}},
                              {"name":"rmmeda-cps","config":{"kind":"rmmeda","population_size":20,"cps_enabled":true}}],
                "problems":[{"name":"zdt1","n_vars":8,"max_fes":200}],"seeds":[1,2,3]}"#,
        )
        .unwrap()
    }

    #[test]
    fn cardinality_and_order() {
        let out = run_matrix(&tiny(), &RunnerOptions::default()).unwrap();
        assert_eq!(out.records.len(), 6);
        assert!(out.is_complete());
        let keys: Vec<_> = out.records.iter().map(|r| (r.algorithm.clone(), r.seed)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn reuse_and_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let mut opts = RunnerOptions { out_dir: Some(dir.path().to_path_buf()), ..Default::default() };
        let first = run_matrix(&tiny(), &opts).unwrap();
        assert_eq!(first.reused, 0);
        let stem = dir.path().join("records").join("rmmeda_zdt1_1.json");
        let before = fs::read(&stem).unwrap();
        let again = run_matrix(&tiny(), &opts).unwrap();
        assert_eq!(again.reused, 6);
        assert_eq!(again.records, first.records);
        opts.overwrite = true;
        let third = run_matrix(&tiny(), &opts).unwrap();
        assert_eq!(third.reused, 0);
        assert_eq!(fs::read(&stem).unwrap(), before);
        assert_eq!(load_records(dir.path()).unwrap(), first.records);
        assert!(dir.path().join("timings.csv").exists());
    }

    #[test]
    fn failing_cells_do_not_abort() {
        let mut m = tiny();
        // A single subproblem cannot host DE donors; the other cells still run.
        m.algorithms.push(super::super::matrix::AlgorithmEntry {
            name: "moead".into(),
            config: {
                let mut c = crate::algorithms::AlgorithmConfig::new(crate::algorithms::AlgorithmKind::MoeadMo, 3);
                c.neighborhood_size = 3;
                c
            },
        });
        let dir = tempfile::tempdir().unwrap();
        let opts = RunnerOptions { out_dir: Some(dir.path().to_path_buf()), ..Default::default() };
        let out = run_matrix(&m, &opts).unwrap();
        assert_eq!(out.records.len(), 6);
        assert_eq!(out.failures.len(), 3);
        assert!(dir.path().join("failures.json").exists());
    }
}
