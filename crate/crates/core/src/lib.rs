//! Multiobjective evolutionary optimization with classification-based
//! preselection (CPS) for RM-MEDA, SMS-EMOA and MOEA/D-MO.
//!
//! The crate provides the building blocks (dominance sorting, variation
//! operators, benchmark problems, quality indicators, rank-sum statistics), the
//! three algorithm drivers and an experiment runner that records trajectories
//! and writes tidy CSV summaries.

pub mod algorithms;
pub mod cps;
pub mod dominance;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod problems;
pub mod stats;
pub mod types;
pub mod variation;

pub use algorithms::{run_algorithm, AlgorithmConfig, AlgorithmKind, Monitor, NullMonitor};
pub use error::{Error, Result};
pub use problems::{Benchmark, Problem, ProblemRegistry};
pub use types::{Bounds, DecisionVector, EvaluationBudget, Individual, ObjectiveVector, RandomSource};
