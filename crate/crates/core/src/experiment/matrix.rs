use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::validate_checkpoints;
use crate::algorithms::{AlgorithmConfig, AlgorithmKind};
use crate::error::{invalid_config, Error, Result};
use crate::problems::ProblemRegistry;

fn default_n_vars() -> usize {
    30
}

fn default_thresholds() -> Vec<f64> {
    vec![1e-1, 5e-2, 1e-2, 5e-3]
}

fn default_reference_points() -> usize {
    super::record::DEFAULT_REFERENCE_POINTS
}

fn default_alpha() -> f64 {
    0.05
}

/// A named algorithm configuration in a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    pub name: String,
    pub config: AlgorithmConfig,
}

/// One problem instance with its budget. `population_size` overrides the
/// algorithms' own setting for this problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default = "default_n_vars")]
    pub n_vars: usize,
    pub max_fes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_size: Option<usize>,
}

impl ProblemSpec {
    pub fn new(name: &str, n_vars: usize, population_size: usize, max_fes: u64) -> Self {
        Self { name: name.to_string(), n_vars, max_fes, population_size: Some(population_size) }
    }
}

/// The full experiment: every algorithm on every problem for every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMatrix {
    pub name: String,
    pub algorithms: Vec<AlgorithmEntry>,
    pub problems: Vec<ProblemSpec>,
    pub seeds: Vec<u64>,
    /// Shared checkpoint list; defaults to every N evaluations per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_thresholds")]
    pub igd_thresholds: Vec<f64>,
    #[serde(default)]
    pub instrumentation: bool,
    #[serde(default = "default_reference_points")]
    pub reference_points: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

/// One (algorithm, problem, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub algorithm: usize,
    pub problem: usize,
    pub seed: u64,
}

impl ExperimentMatrix {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() || self.problems.is_empty() || self.seeds.is_empty() {
            return Err(invalid_config("a matrix needs at least one algorithm, problem and seed"));
        }
        let mut names = BTreeSet::new();
        for a in &self.algorithms {
            if a.name.is_empty() || a.name.contains(['/', '\\']) {
                return Err(invalid_config(format!("algorithm name '{}' must be nonempty without path separators", a.name)));
            }
            if !names.insert(&a.name) {
                return Err(invalid_config(format!("duplicate algorithm name '{}'", a.name)));
            }
            a.config.validate()?;
        }
        let registry = ProblemRegistry::default();
        let mut problems = BTreeSet::new();
        for p in &self.problems {
            if !problems.insert(&p.name) {
                return Err(invalid_config(format!("duplicate problem '{}'", p.name)));
            }
            registry.create(&p.name, p.n_vars).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            for a in &self.algorithms {
                let n = self.config_for(a, p).population_size;
                if p.max_fes < n as u64 {
                    return Err(invalid_config(format!("budget of {} on {} is below the population size {n}", p.max_fes, p.name)));
                }
            }
            if let Some(c) = &self.checkpoints {
                validate_checkpoints(c, p.max_fes)?;
            }
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(invalid_config("duplicate seeds"));
        }
        if self.igd_thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(invalid_config("IGD thresholds must be positive"));
        }
        if self.reference_points < 2 {
            return Err(invalid_config("at least two reference points are needed"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid_config("alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    /// The algorithm configuration applied to `problem`.
    pub fn config_for(&self, algorithm: &AlgorithmEntry, problem: &ProblemSpec) -> AlgorithmConfig {
        let mut cfg = algorithm.config.clone();
        if let Some(n) = problem.population_size {
            cfg.population_size = n;
        }
        cfg
    }

    /// All cells ordered by (algorithm, problem, seed) as listed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for a in 0..self.algorithms.len() {
            for p in 0..self.problems.len() {
                for &seed in &self.seeds {
                    cells.push(Cell { algorithm: a, problem: p, seed });
                }
            }
        }
        cells
    }

    /// Restricts the matrix to its first `runs` seeds.
    pub fn limit_runs(&mut self, runs: usize) {
        self.seeds.truncate(runs.max(1));
    }
}

/// File stem of a record: `<alg>_<prob>_<seed>`.
pub fn record_stem(algorithm: &str, problem: &str, seed: u64) -> String {
    format!("{algorithm}_{problem}_{seed}")
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 4] = ["paper_small", "paper_large", "sensitivity_M", "sensitivity_cap"];

fn entry(name: &str, config: AlgorithmConfig) -> AlgorithmEntry {
    AlgorithmEntry { name: name.to_string(), config }
}

/// Baseline and CPS (K=3, M=3, 5N archives) variants of all three algorithms.
fn paired_algorithms(n: usize) -> Vec<AlgorithmEntry> {
    let mut out = Vec::new();
    for kind in [AlgorithmKind::Rmmeda, AlgorithmKind::Smsemoa, AlgorithmKind::MoeadMo] {
        let base = AlgorithmConfig::new(kind, n);
        out.push(entry(&base.label(), base.clone()));
        let cps = base.with_cps(3);
        out.push(entry(&cps.label(), cps));
    }
    out
}

fn matrix(name: &str, algorithms: Vec<AlgorithmEntry>, problems: Vec<ProblemSpec>) -> ExperimentMatrix {
    ExperimentMatrix {
        name: name.to_string(),
        algorithms,
        problems,
        seeds: (1..=30).collect(),
        checkpoints: None,
        igd_thresholds: default_thresholds(),
        instrumentation: false,
        reference_points: default_reference_points(),
        alpha: default_alpha(),
    }
}

fn small_problems() -> Vec<ProblemSpec> {
    let mut problems: Vec<ProblemSpec> =
        ["zdt1", "zdt2", "zdt6"].iter().map(|p| ProblemSpec::new(p, 30, 100, 20_000)).collect();
    problems.extend(["zdt1-linlink", "zdt2-linlink", "zdt6-linlink"].iter().map(|p| ProblemSpec::new(p, 30, 200, 40_000)));
    problems.extend(["zdt1-nllink", "zdt2-nllink", "zdt6-nllink"].iter().map(|p| ProblemSpec::new(p, 30, 200, 100_000)));
    problems.extend(["dtlz2", "dtlz2-linlink", "dtlz2-nllink"].iter().map(|p| ProblemSpec::new(p, 30, 200, 100_000)));
    problems
}

/// Named experiment grids mapped onto the built-in suite.
pub fn preset(name: &str) -> Result<ExperimentMatrix> {
    match name {
        "paper_small" => Ok(matrix(name, paired_algorithms(100), small_problems())),
        "paper_large" => {
            let mut problems: Vec<ProblemSpec> = ["zdt1-linlink", "zdt2-linlink", "zdt6-linlink", "zdt1-nllink", "zdt2-nllink", "zdt6-nllink"]
                .iter()
                .map(|p| ProblemSpec::new(p, 30, 300, 150_000))
                .collect();
            problems.extend(["dtlz2-linlink", "dtlz2-nllink"].iter().map(|p| ProblemSpec::new(p, 30, 595, 297_500)));
            Ok(matrix(name, paired_algorithms(300), problems))
        }
        "sensitivity_M" => {
            let base = AlgorithmConfig::new(AlgorithmKind::Rmmeda, 100);
            let mut algorithms = vec![entry(&base.label(), base.clone())];
            for m in 2..=5 {
                algorithms.push(entry(&format!("rmmeda-cps-m{m}"), base.clone().with_cps(m)));
            }
            Ok(matrix(name, algorithms, small_problems()))
        }
        "sensitivity_cap" => {
            let base = AlgorithmConfig::new(AlgorithmKind::Rmmeda, 100);
            let mut algorithms = vec![entry(&base.label(), base.clone())];
            for cap in [0.5, 2.0, 3.0, 5.0, 8.0, 10.0] {
                let mut cfg = base.clone().with_cps(3);
                cfg.cap_multiplier = cap;
                algorithms.push(entry(&format!("rmmeda-cps-cap{cap}"), cfg));
            }
            Ok(matrix(name, algorithms, small_problems()))
        }
        _ => Err(Error::InvalidConfig(format!("unknown preset '{name}'; available: {}", PRESET_NAMES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESET_NAMES {
            let m = preset(name).unwrap();
            m.validate().unwrap();
            assert_eq!(m.seeds.len(), 30);
            let back = ExperimentMatrix::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn paper_small_defaults() {
        let m = preset("paper_small").unwrap();
        assert_eq!(m.algorithms.len(), 6);
        for a in m.algorithms.iter().filter(|a| a.config.cps_enabled) {
            assert_eq!((a.config.knn.k, a.config.candidates, a.config.cap_multiplier), (3, 3, 5.0));
        }
        let zdt1 = &m.problems[0];
        assert_eq!((zdt1.name.as_str(), zdt1.population_size, zdt1.max_fes), ("zdt1", Some(100), 20_000));
    }

    #[test]
    fn sensitivity_presets_differ_in_one_field() {
        let m = preset("sensitivity_M").unwrap();
        let rows: Vec<_> = m.algorithms.iter().filter(|a| a.config.cps_enabled).collect();
        assert_eq!(rows.iter().map(|a| a.config.candidates).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        for a in &rows {
            let mut c = a.config.clone();
            c.candidates = 3;
            assert_eq!(c, rows[1].config);
        }
        let m = preset("sensitivity_cap").unwrap();
        let caps: Vec<f64> = m.algorithms.iter().filter(|a| a.config.cps_enabled).map(|a| a.config.cap_multiplier).collect();
        assert_eq!(caps, vec![0.5, 2.0, 3.0, 5.0, 8.0, 10.0]);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = preset("nope").unwrap_err().to_string();
        assert!(PRESET_NAMES.iter().all(|n| err.contains(n)));
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let mut m = preset("paper_small").unwrap();
        m.checkpoints = Some(vec![200, 100]);
        assert!(m.validate().is_err());
        let mut m = preset("paper_small").unwrap();
        m.problems[0].name = "zdt9".into();
        assert!(m.validate().is_err());
        let mut m = preset("paper_small").unwrap();
        m.algorithms[1].name = m.algorithms[0].name.clone();
        assert!(m.validate().is_err());
        let mut m = preset("paper_small").unwrap();
        m.problems[0].max_fes = 50;
        assert!(m.validate().is_err());
    }

    #[test]
    fn minimal_json() {
        let m = ExperimentMatrix::from_json(
            r#"{"name":"t","algorithms":[{"name":"rmmeda","config":{"kind":"rmmeda","population_size":20}}],
                "problems":[{"name":"zdt1","max_fes":100}],"seeds":[1,2]}"#,
        )
        .unwrap();
        assert_eq!(m.problems[0].n_vars, 30);
        assert_eq!(m.cells().len(), 2);
        assert_eq!(m.igd_thresholds, vec![1e-1, 5e-2, 1e-2, 5e-3]);
    }
}
