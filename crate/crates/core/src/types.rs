//! Shared domain types: box bounds, individuals, evaluation budgets and the
//! seeded random source every stochastic operator draws from.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};

/// A point in decision space.
pub type DecisionVector = Vec<f64>;
/// A point in objective space. All objectives are minimized.
pub type ObjectiveVector = Vec<f64>;

/// Per-dimension box constraints `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(invalid_input(format!(
                "bounds length mismatch: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(invalid_input("bounds must have at least one dimension"));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(invalid_input(format!("dimension {i}: need finite a < b, got [{a}, {b}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit hypercube `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        Self::uniform(n, 0.0, 1.0)
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self::new(vec![lower; n], vec![upper; n]).expect("uniform bounds are well-formed")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Clamps `x` into the box in place. Feasible components are untouched.
    pub fn clamp_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        for (v, (a, b)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            if *v < *a {
                *v = *a;
            } else if *v > *b {
                *v = *b;
            } else if v.is_nan() {
                *v = 0.5 * (*a + *b);
            }
        }
    }

    pub fn sample_uniform(&self, rng: &mut RandomSource) -> DecisionVector {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| a + (b - a) * rng.uniform())
            .collect()
    }
}

/// Repairs `x` by clamping each component into `[a_i, b_i]`.
pub fn clamp_to_bounds(x: &[f64], bounds: &Bounds) -> Result<DecisionVector> {
    if x.len() != bounds.dim() {
        return Err(invalid_input(format!(
            "decision vector has {} components, bounds have {}",
            x.len(),
            bounds.dim()
        )));
    }
    let mut out = x.to_vec();
    bounds.clamp_in_place(&mut out);
    Ok(out)
}

/// A candidate solution. `f` is present exactly when the individual has been evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: DecisionVector,
    pub f: Option<ObjectiveVector>,
}

impl Individual {
    pub fn new(x: DecisionVector) -> Self {
        Self { x, f: None }
    }

    pub fn evaluated(x: DecisionVector, f: ObjectiveVector) -> Self {
        Self { x, f: Some(f) }
    }

    pub fn is_evaluated(&self) -> bool {
        self.f.is_some()
    }

    /// Objective vector of an evaluated individual.
    ///
    /// Panics if the individual has not been evaluated; use [`objectives_of`] when
    /// the population comes from outside the library.
    pub fn objectives(&self) -> &[f64] {
        self.f.as_deref().expect("individual has not been evaluated")
    }
}

/// Borrows the objective vectors of a population, failing on any unevaluated member.
pub fn objectives_of(pop: &[Individual]) -> Result<Vec<&[f64]>> {
    pop.iter()
        .enumerate()
        .map(|(i, ind)| {
            ind.f
                .as_deref()
                .ok_or_else(|| invalid_input(format!("individual {i} has not been evaluated")))
        })
        .collect()
}

/// Counts true objective evaluations against a fixed limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationBudget {
    max_fes: u64,
    used_fes: u64,
}

impl EvaluationBudget {
    pub fn new(max_fes: u64) -> Self {
        Self { max_fes, used_fes: 0 }
    }

    pub fn max_fes(&self) -> u64 {
        self.max_fes
    }

    pub fn used_fes(&self) -> u64 {
        self.used_fes
    }

    pub fn remaining(&self) -> u64 {
        self.max_fes - self.used_fes
    }

    pub fn is_exhausted(&self) -> bool {
        self.used_fes >= self.max_fes
    }

    /// Charges `k` evaluations. The budget is left unchanged when it cannot cover them.
    pub fn consume(&mut self, k: u64) -> Result<()> {
        if k == 0 {
            return Err(invalid_input("must consume at least one evaluation"));
        }
        match self.used_fes.checked_add(k) {
            Some(total) if total <= self.max_fes => {
                self.used_fes = total;
                Ok(())
            }
            _ => Err(Error::BudgetExhausted),
        }
    }
}

/// Seeded, reproducible random stream.
///
/// Identical seeds with identical call sequences yield identical draws. Child
/// streams are derived from the root seed and a stream id, so they do not depend
/// on how much of the parent has been consumed.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `(root seed, stream)`.
    pub fn child(&self, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.wrapping_add(1));
        Self { seed: self.seed, rng }
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits.
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot draw an index from an empty range");
        rand::Rng::random_range(&mut self.rng, 0..n)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
