//! Helpers shared by the benchmarks.

use cpsmoea::{Individual, RandomSource};

/// `n` objective vectors spread uniformly in the unit cube.
pub fn random_objectives(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RandomSource::new(seed);
    (0..n).map(|_| (0..m).map(|_| rng.uniform()).collect()).collect()
}

/// A mutually nondominated set of `n` points on the unit sphere's positive orthant.
pub fn random_front(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RandomSource::new(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..m).map(|_| rng.uniform() + 1e-6).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// Evaluated individuals with random `dim`-dimensional decision vectors and bi-objective values.
pub fn random_individuals(n: usize, dim: usize, seed: u64) -> Vec<Individual> {
    let mut rng = RandomSource::new(seed);
    (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| rng.uniform()).collect();
            Individual::evaluated(x, vec![rng.uniform(), rng.uniform()])
        })
        .collect()
}
