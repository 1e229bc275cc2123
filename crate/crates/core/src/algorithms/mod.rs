//! The three evolutionary drivers, each runnable as a baseline or with
//! classification-based preselection (CPS).
//!
//! With CPS on, every offspring slot produces `candidates` unevaluated
//! candidates and the KNN classifier picks one to evaluate, so the evaluation
//! rate per generation matches the baseline for RM-MEDA and SMS-EMOA. The
//! MOEA/D-MO baseline evaluates every pool offspring; its CPS variant evaluates
//! only the preselected one.

mod moead;
mod rmmeda;
mod smsemoa;

pub use moead::{init_weights, run_moead_mo, tchebycheff, IdealPoint, Subproblem, WeightSet};
pub use rmmeda::run_rmmeda;
pub use smsemoa::run_smsemoa;

use serde::{Deserialize, Serialize};

use crate::cps::{selection_quality, KnnClassifier, KnnConfig, Preselection, SelectionQuality, TrainingArchives};
use crate::error::{invalid_config, Error, Result};
use crate::problems::{evaluate, evaluate_counted, Problem};
use crate::types::{DecisionVector, EvaluationBudget, Individual, RandomSource};
use crate::variation::{DePool, RegularityParams, SbxParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Rmmeda,
    Smsemoa,
    MoeadMo,
}

impl AlgorithmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Rmmeda => "rmmeda",
            AlgorithmKind::Smsemoa => "smsemoa",
            AlgorithmKind::MoeadMo => "moead_mo",
        }
    }
}

fn default_candidates() -> usize {
    3
}

fn default_cap_multiplier() -> f64 {
    5.0
}

fn default_neighbor_prob() -> f64 {
    0.9
}

fn default_replace_cap() -> usize {
    2
}

fn default_neighborhood_size() -> usize {
    20
}

/// Full parameterization of one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    pub population_size: usize,
    #[serde(default)]
    pub cps_enabled: bool,
    /// Candidates generated per offspring slot (M).
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default)]
    pub knn: KnnConfig,
    /// Archive capacity as a multiple of the population size.
    #[serde(default = "default_cap_multiplier")]
    pub cap_multiplier: f64,
    /// MOEA/D: probability of mating within the neighbourhood (p_n).
    #[serde(default = "default_neighbor_prob")]
    pub neighbor_prob: f64,
    /// MOEA/D: maximum replacements per offspring (C).
    #[serde(default = "default_replace_cap")]
    pub replace_cap: usize,
    /// MOEA/D: neighbourhood size (T).
    #[serde(default = "default_neighborhood_size")]
    pub neighborhood_size: usize,
    #[serde(default)]
    pub regularity: RegularityParams,
    #[serde(default)]
    pub sbx: SbxParams,
    #[serde(default)]
    pub de: DePool,
}

impl AlgorithmConfig {
    /// Baseline configuration with the default parameters.
    pub fn new(kind: AlgorithmKind, population_size: usize) -> Self {
        Self {
            kind,
            population_size,
            cps_enabled: false,
            candidates: default_candidates(),
            knn: KnnConfig::default(),
            cap_multiplier: default_cap_multiplier(),
            neighbor_prob: default_neighbor_prob(),
            replace_cap: default_replace_cap(),
            neighborhood_size: default_neighborhood_size(),
            regularity: RegularityParams::default(),
            sbx: SbxParams::default(),
            de: DePool::default(),
        }
    }

    /// The same configuration with CPS switched on and `m` candidates per slot.
    pub fn with_cps(mut self, m: usize) -> Self {
        self.cps_enabled = true;
        self.candidates = m;
        self
    }

    /// Short identifier such as `rmmeda` or `moead_mo-cps`.
    pub fn label(&self) -> String {
        if self.cps_enabled {
            format!("{}-cps", self.kind.as_str())
        } else {
            self.kind.as_str().to_string()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(invalid_config("population size must be at least 2"));
        }
        if self.candidates == 0 {
            return Err(invalid_config("candidates per slot (M) must be at least 1"));
        }
        if self.cps_enabled {
            self.knn.validate()?;
            if !(self.cap_multiplier > 0.0) {
                return Err(invalid_config("archive cap multiplier must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.neighbor_prob) {
            return Err(invalid_config("neighbour mating probability must lie in [0, 1]"));
        }
        if self.kind == AlgorithmKind::MoeadMo {
            self.de.validate()?;
            if self.neighborhood_size < 2 {
                return Err(invalid_config("neighbourhood size must be at least 2"));
            }
        }
        Ok(())
    }

    /// Candidates produced per slot: M with CPS, one otherwise (MOEA/D keeps M).
    pub(crate) fn candidates_per_slot(&self) -> usize {
        if self.cps_enabled || self.kind == AlgorithmKind::MoeadMo {
            self.candidates
        } else {
            1
        }
    }
}

/// Observer of a running algorithm.
pub trait Monitor {
    /// Called whenever the population is in a consistent state (after
    /// initialization and after every generation or steady-state iteration).
    fn observe(&mut self, fes: u64, population: &[Individual]);

    /// Whether to spend extra, uncounted evaluations on diagnosing preselection.
    fn instrumented(&self) -> bool {
        false
    }

    fn preselection(&mut self, _quality: SelectionQuality) {}

    /// Called after each archive update with the generation counter.
    fn archives(&mut self, _generation: usize, _archives: &TrainingArchives) {}
}

/// A monitor that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullMonitor;

impl Monitor for NullMonitor {
    fn observe(&mut self, _fes: u64, _population: &[Individual]) {}
}

/// Independent random streams for each stochastic stage of a run.
pub(crate) struct Streams {
    pub init: RandomSource,
    pub model: RandomSource,
    pub variation: RandomSource,
    pub preselect: RandomSource,
    pub mating: RandomSource,
}

impl Streams {
    pub fn new(root: &RandomSource) -> Self {
        Self {
            init: root.child(0),
            model: root.child(1),
            variation: root.child(2),
            preselect: root.child(3),
            mating: root.child(4),
        }
    }
}

pub(crate) fn evaluate_individual(
    problem: &dyn Problem,
    budget: &mut EvaluationBudget,
    x: DecisionVector,
) -> Result<Individual> {
    let f = evaluate_counted(problem, &x, budget)?;
    Ok(Individual::evaluated(x, f))
}

pub(crate) fn initial_population(
    problem: &dyn Problem,
    size: usize,
    budget: &mut EvaluationBudget,
    rng: &mut RandomSource,
) -> Result<Vec<Individual>> {
    if budget.remaining() < size as u64 {
        return Err(Error::InvalidConfig(format!(
            "budget of {} evaluations cannot cover an initial population of {size}",
            budget.remaining()
        )));
    }
    (0..size)
        .map(|_| {
            let x = problem.bounds().sample_uniform(rng);
            evaluate_individual(problem, budget, x)
        })
        .collect()
}

/// CPS state shared by the drivers: the archives and the classifier fitted on them.
pub(crate) struct Preselector {
    pub archives: TrainingArchives,
    pub knn: KnnConfig,
    pub classifier: Option<KnnClassifier>,
    pub generation: usize,
}

impl Preselector {
    pub fn new(cfg: &AlgorithmConfig) -> Self {
        Self {
            archives: TrainingArchives::with_multiplier(cfg.cap_multiplier, cfg.population_size),
            knn: cfg.knn,
            classifier: None,
            generation: 0,
        }
    }

    /// Folds newly evaluated solutions into the archives and refits the classifier.
    pub fn refresh(&mut self, q: &[Individual], problem: &dyn Problem, monitor: &mut dyn Monitor) -> Result<()> {
        self.archives.update(q)?;
        monitor.archives(self.generation, &self.archives);
        self.generation += 1;
        self.classifier = match KnnClassifier::fit(&self.archives, &self.knn, Some(problem.bounds())) {
            Ok(c) => Some(c),
            Err(Error::NoModel) => None,
            Err(e) => return Err(e),
        };
        Ok(())
    }

    /// Chooses one of `candidates`; in instrumented runs also evaluates all of
    /// them off-budget and reports whether the choice was nondominated.
    pub fn choose(
        &self,
        candidates: &[DecisionVector],
        problem: &dyn Problem,
        rng: &mut RandomSource,
        monitor: &mut dyn Monitor,
    ) -> Result<usize> {
        let Preselection { chosen, .. } = crate::cps::preselect(candidates, self.classifier.as_ref(), rng)?;
        if monitor.instrumented() {
            let objs = candidates.iter().map(|c| evaluate(problem, c)).collect::<Result<Vec<_>>>()?;
            monitor.preselection(selection_quality(&objs, chosen)?);
        }
        Ok(chosen)
    }
}

/// Runs the configured algorithm until the budget is spent and returns the final population.
pub fn run_algorithm(
    cfg: &AlgorithmConfig,
    problem: &dyn Problem,
    budget: &mut EvaluationBudget,
    rng: &mut RandomSource,
    monitor: &mut dyn Monitor,
) -> Result<Vec<Individual>> {
    match cfg.kind {
        AlgorithmKind::Rmmeda => run_rmmeda(cfg, problem, budget, rng, monitor),
        AlgorithmKind::Smsemoa => run_smsemoa(cfg, problem, budget, rng, monitor),
        AlgorithmKind::MoeadMo => run_moead_mo(cfg, problem, budget, rng, monitor),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_defaults() {
        let cfg: AlgorithmConfig = serde_json::from_str(r#"{"kind":"rmmeda","population_size":100}"#).unwrap();
        assert_eq!(cfg, AlgorithmConfig::new(AlgorithmKind::Rmmeda, 100));
        assert_eq!(cfg.knn.k, 3);
        assert_eq!(cfg.candidates, 3);
        assert_eq!(cfg.cap_multiplier, 5.0);
        assert_eq!((cfg.neighborhood_size, cfg.neighbor_prob, cfg.replace_cap), (20, 0.9, 2));
    }

    #[test]
    fn config_validation() {
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::Smsemoa, 100).with_cps(3);
        cfg.validate().unwrap();
        cfg.knn.k = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::Rmmeda, 100);
        cfg.candidates = 0;
        assert!(cfg.validate().is_err());
        assert_eq!(AlgorithmConfig::new(AlgorithmKind::MoeadMo, 10).with_cps(3).label(), "moead_mo-cps");
    }
}
