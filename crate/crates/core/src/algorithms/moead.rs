use rand::seq::SliceRandom;

use super::{evaluate_individual, initial_population, AlgorithmConfig, AlgorithmKind, Monitor, Preselector, Streams};
use crate::error::{invalid_config, Error, Result};
use crate::problems::Problem;
use crate::types::{DecisionVector, EvaluationBudget, Individual, RandomSource};
use crate::variation::de_generate;

/// Tchebycheff scalarization `max_j λ_j |f_j - z_j|`.
pub fn tchebycheff(f: &[f64], lambda: &[f64], z: &[f64]) -> f64 {
    debug_assert!(f.len() == lambda.len() && f.len() == z.len());
    f.iter()
        .zip(lambda)
        .zip(z)
        .map(|((fj, lj), zj)| lj * (fj - zj).abs())
        .fold(0.0, f64::max)
}

/// Componentwise best objective values seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPoint(pub Vec<f64>);

impl IdealPoint {
    pub fn from_population(population: &[Individual]) -> Self {
        let m = population[0].objectives().len();
        let mut z = IdealPoint(vec![f64::INFINITY; m]);
        for p in population {
            z.update(p.objectives());
        }
        z
    }

    pub fn update(&mut self, f: &[f64]) {
        for (zj, fj) in self.0.iter_mut().zip(f) {
            if *fj < *zj {
                *zj = *fj;
            }
        }
    }
}

/// One scalar subproblem: its weight and the indices of its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub weight: Vec<f64>,
    pub neighborhood: Vec<usize>,
}

impl Subproblem {
    /// Tchebycheff value of `f` for this subproblem.
    pub fn scalarize(&self, f: &[f64], z: &IdealPoint) -> f64 {
        tchebycheff(f, &self.weight, &z.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub subproblems: Vec<Subproblem>,
    /// Lattice parameter H (weights are multiples of 1/H).
    pub h: usize,
}

impl WeightSet {
    pub fn len(&self) -> usize {
        self.subproblems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subproblems.is_empty()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Simplex-lattice weights and their `t` nearest neighbourhoods (self included).
///
/// For three objectives the largest lattice with at most `n` points is used
/// and the returned set reports the actual size.
pub fn init_weights(n: usize, m: usize, t: usize) -> Result<WeightSet> {
    if n < 2 {
        return Err(invalid_config("at least two subproblems are needed"));
    }
    let (weights, h) = match m {
        2 => {
            let h = n - 1;
            let w = (0..n).map(|i| vec![i as f64 / h as f64, (h - i) as f64 / h as f64]).collect::<Vec<_>>();
            (w, h)
        }
        3 => {
            if n < 3 {
                return Err(invalid_config("three objectives need at least three subproblems"));
            }
            let mut h = 1;
            while binomial(h + 3, 2) <= n {
                h += 1;
            }
            let size = binomial(h + 2, 2);
            if size != n {
                log::warn!("{n} is not a simplex-lattice size for 3 objectives; using {size} subproblems");
            }
            let mut w = Vec::with_capacity(size);
            for i in 0..=h {
                for j in 0..=(h - i) {
                    let k = h - i - j;
                    w.push(vec![i as f64 / h as f64, j as f64 / h as f64, k as f64 / h as f64]);
                }
            }
            (w, h)
        }
        _ => return Err(Error::Unsupported(format!("weight generation for {m} objectives"))),
    };
    let t = t.min(weights.len());
    let subproblems = weights
        .iter()
        .map(|wi| {
            let mut order: Vec<(f64, usize)> = weights
                .iter()
                .enumerate()
                .map(|(j, wj)| (wi.iter().zip(wj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            Subproblem { weight: wi.clone(), neighborhood: order[..t].iter().map(|&(_, j)| j).collect() }
        })
        .collect();
    Ok(WeightSet { subproblems, h })
}

/// Replaces up to `cap` members of `pool` (in order) whose scalarized value `y` improves.
/// Returns the number of replacements.
pub(crate) fn update_neighbors(
    population: &mut [Individual],
    weights: &WeightSet,
    pool: &[usize],
    y: &Individual,
    z: &IdealPoint,
    cap: usize,
) -> usize {
    let mut replaced = 0;
    for &j in pool {
        if replaced >= cap {
            break;
        }
        let sub = &weights.subproblems[j];
        if sub.scalarize(y.objectives(), z) < sub.scalarize(population[j].objectives(), z) {
            population[j] = y.clone();
            replaced += 1;
        }
    }
    replaced
}

/// MOEA/D-MO: MOEA/D with a pool of DE generators.
///
/// The baseline evaluates all M pool offspring of every subproblem, so it
/// spends M·N evaluations per generation. With CPS only the preselected
/// offspring is evaluated and used for the ideal point and neighbour update.
pub fn run_moead_mo(
    cfg: &AlgorithmConfig,
    problem: &dyn Problem,
    budget: &mut EvaluationBudget,
    rng: &mut RandomSource,
    monitor: &mut dyn Monitor,
) -> Result<Vec<Individual>> {
    if cfg.kind != AlgorithmKind::MoeadMo {
        return Err(invalid_config("run_moead_mo called with a different algorithm kind"));
    }
    cfg.validate()?;
    let weights = init_weights(cfg.population_size, problem.n_objectives(), cfg.neighborhood_size)?;
    let n = weights.len();
    let mut streams = Streams::new(rng);
    let mut population = initial_population(problem, n, budget, &mut streams.init)?;
    let mut z = IdealPoint::from_population(&population);
    let mut preselector = cfg.cps_enabled.then(|| Preselector::new(cfg));
    let mut last_offspring = population.clone();
    monitor.observe(budget.used_fes(), &population);

    'generations: while !budget.is_exhausted() {
        if let Some(p) = preselector.as_mut() {
            p.refresh(&last_offspring, problem, monitor)?;
        }
        let mut offspring = Vec::new();
        for i in 0..n {
            let pool: Vec<usize> = if streams.mating.uniform() < cfg.neighbor_prob {
                weights.subproblems[i].neighborhood.clone()
            } else {
                let mut all: Vec<usize> = (0..n).collect();
                all.shuffle(&mut streams.mating);
                all
            };
            let xs: Vec<&[f64]> = population.iter().map(|p| p.x.as_slice()).collect();
            let mut candidates: Vec<DecisionVector> = (0..cfg.candidates)
                .map(|j| {
                    de_generate(i, &pool, &xs, &cfg.de, cfg.de.strategy_for(j), problem.bounds(), &mut streams.variation)
                })
                .collect::<Result<_>>()?;
            if let Some(p) = &preselector {
                let chosen = p.choose(&candidates, problem, &mut streams.preselect, monitor)?;
                candidates = vec![candidates.swap_remove(chosen)];
            }
            for x in candidates {
                if budget.is_exhausted() {
                    monitor.observe(budget.used_fes(), &population);
                    break 'generations;
                }
                let y = evaluate_individual(problem, budget, x)?;
                z.update(y.objectives());
                update_neighbors(&mut population, &weights, &pool, &y, &z, cfg.replace_cap);
                offspring.push(y);
            }
        }
        last_offspring = offspring;
        monitor.observe(budget.used_fes(), &population);
    }
    Ok(population)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tchebycheff_examples() {
        assert_eq!(tchebycheff(&[1.0, 2.0], &[0.5, 0.5], &[0.0, 0.0]), 1.0);
        assert_eq!(tchebycheff(&[0.3, 0.4], &[0.5, 0.5], &[0.3, 0.4]), 0.0);
        assert_eq!(tchebycheff(&[3.0, 7.0], &[1.0, 0.0], &[0.0, 0.0]), 3.0);
    }

    #[test]
    fn two_objective_weights() {
        let w = init_weights(3, 2, 2).unwrap();
        let ws: Vec<_> = w.subproblems.iter().map(|s| s.weight.clone()).collect();
        assert_eq!(ws, vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        for (i, s) in w.subproblems.iter().enumerate() {
            assert_eq!(s.neighborhood.len(), 2);
            assert_eq!(s.neighborhood[0], i);
        }
    }

    #[test]
    fn three_objective_lattice() {
        let w = init_weights(595, 3, 20).unwrap();
        assert_eq!((w.h, w.len()), (33, 595));
        for s in &w.subproblems {
            assert!((s.weight.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(s.neighborhood.len(), 20);
        }
        let w = init_weights(100, 3, 20).unwrap();
        assert_eq!((w.h, w.len()), (12, 91));
        assert!(init_weights(10, 4, 3).is_err());
    }

    #[test]
    fn neighborhoods_are_nearest_by_brute_force() {
        let w = init_weights(15, 3, 5).unwrap();
        for (i, s) in w.subproblems.iter().enumerate() {
            let d = |j: usize| -> f64 {
                w.subproblems[i].weight.iter().zip(&w.subproblems[j].weight).map(|(a, b)| (a - b).powi(2)).sum()
            };
            let worst_in = s.neighborhood.iter().map(|&j| d(j)).fold(0.0, f64::max);
            for j in 0..w.len() {
                if !s.neighborhood.contains(&j) {
                    assert!(d(j) >= worst_in - 1e-12);
                }
            }
        }
    }

    fn ind(f: [f64; 2]) -> Individual {
        Individual::evaluated(vec![0.0], f.to_vec())
    }

    #[test]
    fn replacement_example() {
        let weights = WeightSet {
            subproblems: vec![Subproblem { weight: vec![0.5, 0.5], neighborhood: vec![0] }],
            h: 1,
        };
        let mut pop = vec![ind([3.0, 1.0])];
        let z = IdealPoint(vec![0.0, 0.0]);
        let y = ind([1.0, 2.0]);
        assert_eq!(tchebycheff(pop[0].objectives(), &[0.5, 0.5], &z.0), 1.5);
        assert_eq!(update_neighbors(&mut pop, &weights, &[0], &y, &z, 2), 1);
        assert_eq!(pop[0], y);
    }

    #[test]
    fn replacement_cap_follows_pool_order() {
        let sub = |w: [f64; 2]| Subproblem { weight: w.to_vec(), neighborhood: vec![] };
        let weights = WeightSet { subproblems: vec![sub([0.5, 0.5]); 5], h: 1 };
        let mut pop = vec![ind([5.0, 5.0]); 5];
        let z = IdealPoint(vec![0.0, 0.0]);
        let y = ind([1.0, 1.0]);
        let pool = [3, 1, 4, 0, 2];
        assert_eq!(update_neighbors(&mut pop, &weights, &pool, &y, &z, 2), 2);
        for (j, p) in pop.iter().enumerate() {
            assert_eq!(p == &y, j == 3 || j == 1);
        }
    }

    #[test]
    fn ideal_point_tracks_minimum() {
        let mut z = IdealPoint::from_population(&[ind([1.0, 4.0]), ind([2.0, 3.0])]);
        assert_eq!(z.0, vec![1.0, 3.0]);
        z.update(&[0.5, 5.0]);
        assert_eq!(z.0, vec![0.5, 3.0]);
    }
}
