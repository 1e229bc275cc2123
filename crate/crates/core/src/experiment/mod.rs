//! Experiment matrices, run recording, parallel execution and summaries.

mod matrix;
mod record;
mod runner;
mod summary;

pub use matrix::{preset, record_stem, AlgorithmEntry, Cell, ExperimentMatrix, ProblemSpec, PRESET_NAMES};
pub use record::{
    default_checkpoints, execute_run, validate_checkpoints, Recorder, ReferenceData, RunOptions, RunRecord, Snapshot,
    TracePoint, DEFAULT_REFERENCE_POINTS, SNAPSHOT_FRACTIONS,
};
pub use runner::{load_records, record_json, records_dir, run_matrix, CellFailure, CellTiming, MatrixOutcome, RunnerOptions};
pub use summary::{
    baseline_pairs, compare_dirs, fes_to_reach, summarize, summarize_dir, write_summary, CompareRow, FesToTarget, Metric,
    MetricStats, Summary, SummaryRow, Tally, TraceRow, VerdictRow,
};
