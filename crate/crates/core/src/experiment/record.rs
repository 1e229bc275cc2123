use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algorithms::{run_algorithm, AlgorithmConfig, Monitor};
use crate::cps::{SelectionQuality, TrainingArchives};
use crate::dominance::nondominated_indices;
use crate::error::{invalid_config, Result};
use crate::metrics::{hypervolume, igd, HvReference};
use crate::problems::{pareto_front_sample, Problem};
use crate::types::{EvaluationBudget, Individual, ObjectiveVector, RandomSource};

/// Fractions of the budget at which the population is snapshotted.
pub const SNAPSHOT_FRACTIONS: [f64; 3] = [0.1, 0.2, 0.3];

/// Default number of reference-front points used by the indicators.
pub const DEFAULT_REFERENCE_POINTS: usize = 10_000;

/// Reference front of one problem with its cached hypervolume.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub front: Vec<ObjectiveVector>,
    pub hv_reference: HvReference,
    pub front_hv: f64,
}

impl ReferenceData {
    pub fn for_problem(problem: &dyn Problem, points: usize) -> Result<Self> {
        let front = pareto_front_sample(problem, points)?;
        let hv_reference = HvReference::standard(problem.n_objectives());
        let front_hv = hypervolume(&front, &hv_reference.0)?;
        Ok(Self { front, hv_reference, front_hv })
    }

    /// IGD and hypervolume difference of the nondominated members of `population`.
    pub fn indicators(&self, population: &[Individual]) -> Result<(f64, f64)> {
        let objs: Vec<&[f64]> = population.iter().map(|p| p.objectives()).collect();
        let nd: Vec<&[f64]> = nondominated_indices(&objs).into_iter().map(|i| objs[i]).collect();
        let igd = igd(&self.front, &nd)?;
        let ihv = self.front_hv - hypervolume(&nd, &self.hv_reference.0)?;
        Ok((igd, ihv))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub fes: u64,
    pub igd: f64,
    pub ihv_minus: f64,
    /// Share of preselected offspring that were nondominated among their
    /// candidates since the previous checkpoint (instrumented CPS runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cps_nondominated_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub fraction: f64,
    pub fes: u64,
    pub population: Vec<Individual>,
}

/// Everything recorded about one (algorithm, problem, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub problem: String,
    pub n_vars: usize,
    pub seed: u64,
    pub max_fes: u64,
    pub used_fes: u64,
    pub instrumented: bool,
    pub config: AlgorithmConfig,
    pub trace: Vec<TracePoint>,
    pub snapshots: Vec<Snapshot>,
    pub final_igd: f64,
    pub final_ihv_minus: f64,
    pub final_population: Vec<Individual>,
}

/// Per-run options beyond the algorithm configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Explicit checkpoints; defaults to every N evaluations plus the budget.
    pub checkpoints: Option<Vec<u64>>,
    pub instrumentation: bool,
    /// Write the training archives of every generation to this CSV file.
    pub archive_csv: Option<PathBuf>,
}

/// Every `n` evaluations up to `max_fes`, always ending at `max_fes`.
pub fn default_checkpoints(n: usize, max_fes: u64) -> Vec<u64> {
    let step = n.max(1) as u64;
    let mut cps: Vec<u64> = (1..).map(|k| k * step).take_while(|&c| c < max_fes).collect();
    cps.push(max_fes);
    cps
}

pub fn validate_checkpoints(checkpoints: &[u64], max_fes: u64) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(invalid_config("checkpoint list is empty"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid_config("checkpoints must be strictly increasing"));
    }
    if checkpoints[checkpoints.len() - 1] > max_fes {
        return Err(invalid_config(format!("checkpoint beyond the budget of {max_fes}")));
    }
    Ok(())
}

/// Monitor that turns observations into trace points and snapshots.
///
/// Checkpoint `c` is recorded at the first observation with at least `c`
/// evaluations spent and is labelled `c`.
pub struct Recorder {
    reference: Arc<ReferenceData>,
    checkpoints: Vec<u64>,
    next: usize,
    snapshot_targets: Vec<(f64, u64)>,
    instrumented: bool,
    nd_hits: u64,
    nd_total: u64,
    archive_writer: Option<csv::Writer<BufWriter<File>>>,
    archive_rows: usize,
    pub trace: Vec<TracePoint>,
    pub snapshots: Vec<Snapshot>,
    pub error: Option<crate::Error>,
}

impl Recorder {
    pub fn new(reference: Arc<ReferenceData>, checkpoints: Vec<u64>, max_fes: u64, instrumented: bool) -> Self {
        let snapshot_targets =
            SNAPSHOT_FRACTIONS.iter().map(|&p| (p, ((p * max_fes as f64).round() as u64).max(1))).collect();
        Self {
            reference,
            checkpoints,
            next: 0,
            snapshot_targets,
            instrumented,
            nd_hits: 0,
            nd_total: 0,
            archive_writer: None,
            archive_rows: 0,
            trace: Vec::new(),
            snapshots: Vec::new(),
            error: None,
        }
    }

    pub fn with_archive_csv(mut self, path: &std::path::Path) -> Result<Self> {
        self.archive_writer = Some(csv::Writer::from_writer(BufWriter::new(File::create(path)?)));
        Ok(self)
    }

    fn record(&mut self, fes: u64, population: &[Individual]) -> Result<()> {
        if self.next < self.checkpoints.len() && self.checkpoints[self.next] <= fes {
            let (igd, ihv_minus) = self.reference.indicators(population)?;
            let fraction = (self.instrumented && self.nd_total > 0).then(|| self.nd_hits as f64 / self.nd_total as f64);
            self.nd_hits = 0;
            self.nd_total = 0;
            while self.next < self.checkpoints.len() && self.checkpoints[self.next] <= fes {
                self.trace.push(TracePoint {
                    fes: self.checkpoints[self.next],
                    igd,
                    ihv_minus,
                    cps_nondominated_fraction: fraction,
                });
                self.next += 1;
            }
        }
        while let Some(&(fraction, target)) = self.snapshot_targets.first() {
            if target > fes {
                break;
            }
            self.snapshots.push(Snapshot { fraction, fes, population: population.to_vec() });
            self.snapshot_targets.remove(0);
        }
        Ok(())
    }
}

impl Monitor for Recorder {
    fn observe(&mut self, fes: u64, population: &[Individual]) {
        if self.error.is_none() {
            if let Err(e) = self.record(fes, population) {
                self.error = Some(e);
            }
        }
    }

    fn instrumented(&self) -> bool {
        self.instrumented
    }

    fn preselection(&mut self, quality: SelectionQuality) {
        self.nd_total += 1;
        if quality == SelectionQuality::Nondominated {
            self.nd_hits += 1;
        }
    }

    fn archives(&mut self, generation: usize, archives: &TrainingArchives) {
        if let Some(w) = self.archive_writer.as_mut() {
            let header = self.archive_rows == 0 && !archives.is_empty();
            if let Err(e) = archives.write_csv(w, generation, header) {
                self.error.get_or_insert(e);
            }
            self.archive_rows += archives.len();
        }
    }
}

/// Runs one configuration with full recording.
pub fn execute_run(
    cfg: &AlgorithmConfig,
    problem: &dyn Problem,
    max_fes: u64,
    seed: u64,
    reference: Arc<ReferenceData>,
    options: &RunOptions,
) -> Result<RunRecord> {
    let checkpoints = match &options.checkpoints {
        Some(c) => c.clone(),
        None => default_checkpoints(cfg.population_size, max_fes),
    };
    validate_checkpoints(&checkpoints, max_fes)?;
    let instrumented = options.instrumentation && cfg.cps_enabled;
    let mut recorder = Recorder::new(reference.clone(), checkpoints, max_fes, instrumented);
    if let Some(path) = &options.archive_csv {
        recorder = recorder.with_archive_csv(path)?;
    }
    let mut budget = EvaluationBudget::new(max_fes);
    let mut rng = RandomSource::new(seed);
    let population = run_algorithm(cfg, problem, &mut budget, &mut rng, &mut recorder)?;
    if let Some(e) = recorder.error.take() {
        return Err(e);
    }
    if let Some(w) = recorder.archive_writer.as_mut() {
        w.flush()?;
    }
    let (final_igd, final_ihv_minus) = reference.indicators(&population)?;
    Ok(RunRecord {
        algorithm: cfg.label(),
        problem: problem.name().to_string(),
        n_vars: problem.n_vars(),
        seed,
        max_fes,
        used_fes: budget.used_fes(),
        instrumented,
        config: cfg.clone(),
        trace: recorder.trace,
        snapshots: recorder.snapshots,
        final_igd,
        final_ihv_minus,
        final_population: population,
    })
}
