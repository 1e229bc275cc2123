use serde::{Deserialize, Serialize};

use super::sbx::{polynomial_mutation, PolynomialMutation};
use crate::error::{invalid_config, invalid_input, Result};
use crate::types::{Bounds, DecisionVector, RandomSource};

/// Differential-evolution mutation formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeStrategy {
    /// `x_r1 + F (x_r2 - x_r3)`
    Rand1,
    /// `x_r1 + F (x_r2 - x_r3) + F (x_r4 - x_r5)`
    Rand2,
    /// `x_i + K (x_r1 - x_i) + F (x_r2 - x_r3)`, `K ~ U[0, 1]`; no crossover.
    CurrentToRand1,
}

impl DeStrategy {
    fn donors(self) -> usize {
        match self {
            DeStrategy::Rand1 | DeStrategy::CurrentToRand1 => 3,
            DeStrategy::Rand2 => 5,
        }
    }
}

/// The operator pool used to produce several offspring per subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DePool {
    pub strategies: Vec<DeStrategy>,
    pub f_scale: f64,
    pub cr: f64,
    #[serde(default)]
    pub mutation: PolynomialMutation,
}

impl Default for DePool {
    fn default() -> Self {
        Self {
            strategies: vec![DeStrategy::Rand1, DeStrategy::Rand2, DeStrategy::CurrentToRand1],
            f_scale: 0.5,
            cr: 1.0,
            mutation: PolynomialMutation::default(),
        }
    }
}

impl DePool {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(invalid_config("DE pool needs at least one strategy"));
        }
        if !(self.f_scale >= 0.0) || !(0.0..=1.0).contains(&self.cr) {
            return Err(invalid_config("DE pool needs F >= 0 and CR in [0, 1]"));
        }
        Ok(())
    }

    /// Strategy used for the `j`-th of several offspring (cycles through the pool).
    pub fn strategy_for(&self, j: usize) -> DeStrategy {
        self.strategies[j % self.strategies.len()]
    }
}

fn draw_distinct(from: &[usize], count: usize, rng: &mut RandomSource) -> Vec<usize> {
    rand::seq::index::sample(rng, from.len(), count).into_iter().map(|k| from[k]).collect()
}

/// One DE offspring for subproblem `i` with parents from `pool`.
///
/// When the pool holds too few distinct donors (other than `i`) for `strategy`,
/// falls back to rand/1 over the whole population.
#[allow(clippy::too_many_arguments)]
pub fn de_generate<T: AsRef<[f64]>>(
    i: usize,
    pool: &[usize],
    xs: &[T],
    depool: &DePool,
    strategy: DeStrategy,
    bounds: &Bounds,
    rng: &mut RandomSource,
) -> Result<DecisionVector> {
    let n = bounds.dim();
    let mut donors_from: Vec<usize> = pool.iter().copied().filter(|&j| j != i).collect();
    donors_from.sort_unstable();
    donors_from.dedup();
    let mut strategy = strategy;
    if donors_from.len() < strategy.donors() {
        strategy = DeStrategy::Rand1;
        donors_from = (0..xs.len()).filter(|&j| j != i).collect();
        if donors_from.len() < 3 {
            return Err(invalid_input("population too small for differential evolution"));
        }
    }
    let r = draw_distinct(&donors_from, strategy.donors(), rng);
    let x = |k: usize| xs[k].as_ref();
    let f = depool.f_scale;
    let current = x(i);
    let mutant: Vec<f64> = match strategy {
        DeStrategy::Rand1 => (0..n).map(|d| x(r[0])[d] + f * (x(r[1])[d] - x(r[2])[d])).collect(),
        DeStrategy::Rand2 => (0..n)
            .map(|d| x(r[0])[d] + f * (x(r[1])[d] - x(r[2])[d]) + f * (x(r[3])[d] - x(r[4])[d]))
            .collect(),
        DeStrategy::CurrentToRand1 => {
            let k = rng.uniform();
            (0..n)
                .map(|d| current[d] + k * (x(r[0])[d] - current[d]) + f * (x(r[1])[d] - x(r[2])[d]))
                .collect()
        }
    };
    let mut child = match strategy {
        DeStrategy::CurrentToRand1 => mutant,
        _ => {
            let forced = rng.index(n);
            (0..n)
                .map(|d| if d == forced || rng.uniform() < depool.cr { mutant[d] } else { current[d] })
                .collect()
        }
    };
    bounds.clamp_in_place(&mut child);
    polynomial_mutation(&mut child, bounds, &depool.mutation, rng);
    Ok(child)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool_no_mutation(f: f64) -> DePool {
        DePool { f_scale: f, mutation: PolynomialMutation::disabled(), ..Default::default() }
    }

    #[test]
    fn zero_scale_returns_base_vector() {
        let xs: Vec<Vec<f64>> = (0..6).map(|k| vec![k as f64 / 10.0; 2]).collect();
        let b = Bounds::unit(2);
        let mut rng = RandomSource::new(1);
        for _ in 0..50 {
            let y = de_generate(0, &[0, 1, 2, 3, 4, 5], &xs, &pool_no_mutation(0.0), DeStrategy::Rand1, &b, &mut rng)
                .unwrap();
            assert!(xs[1..].contains(&y), "{y:?}");
        }
    }

    #[test]
    fn identical_pool_reproduces_member() {
        let xs = vec![vec![0.3, 0.6, 0.9]; 8];
        let b = Bounds::unit(3);
        let mut rng = RandomSource::new(2);
        let pool: Vec<usize> = (0..8).collect();
        for s in [DeStrategy::Rand1, DeStrategy::Rand2, DeStrategy::CurrentToRand1] {
            let y = de_generate(0, &pool, &xs, &pool_no_mutation(0.5), s, &b, &mut rng).unwrap();
            for (a, e) in y.iter().zip(&xs[0]) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rand1_formula() {
        // Donors {0, 1, 0}: the orderings give 0.5, -0.5 or 1.0; x_r1 = 0, x_r2 = 1, x_r3 = 0 gives 0.5.
        let xs = vec![vec![0.9], vec![0.0], vec![1.0], vec![0.0]];
        let b = Bounds::uniform(1, -1.0, 1.0);
        let mut rng = RandomSource::new(3);
        let mut seen_half = false;
        for _ in 0..200 {
            let y = de_generate(0, &[1, 2, 3], &xs, &pool_no_mutation(0.5), DeStrategy::Rand1, &b, &mut rng).unwrap();
            let allowed = [0.5, -0.5, 1.0];
            assert!(allowed.iter().any(|a| (y[0] - a).abs() < 1e-12), "{y:?}");
            seen_half |= (y[0] - 0.5).abs() < 1e-12;
        }
        assert!(seen_half);
    }

    #[test]
    fn small_pool_falls_back_to_rand1_over_population() {
        let xs: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64 / 10.0]).collect();
        let b = Bounds::unit(1);
        let mut rng = RandomSource::new(4);
        let y = de_generate(0, &[0, 1], &xs, &DePool::default(), DeStrategy::Rand2, &b, &mut rng).unwrap();
        assert!(b.contains(&y));
        assert!(de_generate(0, &[0], &xs[..3], &DePool::default(), DeStrategy::Rand1, &b, &mut rng).is_err());
    }

    #[test]
    fn offspring_respect_bounds() {
        let mut rng = RandomSource::new(5);
        let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| rng.uniform()).collect()).collect();
        let b = Bounds::unit(4);
        let pool: Vec<usize> = (0..20).collect();
        let depool = DePool { f_scale: 2.0, ..Default::default() };
        for j in 0..300 {
            let y = de_generate(j % 20, &pool, &xs, &depool, depool.strategy_for(j), &b, &mut rng).unwrap();
            assert!(b.contains(&y));
        }
    }
}
