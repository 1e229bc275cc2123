use super::{evaluate_individual, initial_population, AlgorithmConfig, AlgorithmKind, Monitor, Preselector, Streams};
use crate::dominance::sort_fronts;
use crate::error::{invalid_config, Result};
use crate::metrics::{argmin_contribution, hv_contributions};
use crate::problems::Problem;
use crate::types::{DecisionVector, EvaluationBudget, Individual, RandomSource};
use crate::variation::sbx_polynomial;

/// Offset added to the nadir of the last front to form the reference point for contributions.
pub const REFERENCE_OFFSET: f64 = 1.0;

/// SMS-EMOA: steady state, one evaluated offspring per iteration and removal of
/// the least hypervolume contributor of the worst front.
pub fn run_smsemoa(
    cfg: &AlgorithmConfig,
    problem: &dyn Problem,
    budget: &mut EvaluationBudget,
    rng: &mut RandomSource,
    monitor: &mut dyn Monitor,
) -> Result<Vec<Individual>> {
    if cfg.kind != AlgorithmKind::Smsemoa {
        return Err(invalid_config("run_smsemoa called with a different algorithm kind"));
    }
    cfg.validate()?;
    let n = cfg.population_size;
    let mut streams = Streams::new(rng);
    let mut population = initial_population(problem, n, budget, &mut streams.init)?;
    let mut preselector = cfg.cps_enabled.then(|| Preselector::new(cfg));
    let mut last_offspring = population.clone();
    monitor.observe(budget.used_fes(), &population);

    while !budget.is_exhausted() {
        if let Some(p) = preselector.as_mut() {
            p.refresh(&last_offspring, problem, monitor)?;
        }
        let count = cfg.candidates_per_slot();
        let mut candidates: Vec<DecisionVector> = (0..count)
            .map(|_| {
                let a = streams.mating.index(n);
                let mut b = streams.mating.index(n - 1);
                if b >= a {
                    b += 1;
                }
                sbx_polynomial(&population[a].x, &population[b].x, problem.bounds(), &cfg.sbx, &mut streams.variation)
            })
            .collect();
        let chosen = match &preselector {
            Some(p) => p.choose(&candidates, problem, &mut streams.preselect, monitor)?,
            None => 0,
        };
        let child = evaluate_individual(problem, budget, candidates.swap_remove(chosen))?;
        population.push(child.clone());
        reduce(&mut population)?;
        last_offspring = vec![child];
        monitor.observe(budget.used_fes(), &population);
    }
    Ok(population)
}

/// Removes the member of the last nondominated front with the smallest
/// hypervolume contribution (lowest index on ties).
pub(crate) fn reduce(population: &mut Vec<Individual>) -> Result<()> {
    let objs: Vec<&[f64]> = population.iter().map(|p| p.objectives()).collect();
    let fronts = sort_fronts(&objs);
    let last = fronts.last().expect("population is nonempty");
    let victim = if last.len() == 1 {
        last[0]
    } else {
        let front: Vec<&[f64]> = last.iter().map(|&i| objs[i]).collect();
        let m = front[0].len();
        let reference: Vec<f64> = (0..m)
            .map(|j| front.iter().map(|f| f[j]).fold(f64::NEG_INFINITY, f64::max) + REFERENCE_OFFSET)
            .collect();
        let contributions = hv_contributions(&front, &reference)?;
        last[argmin_contribution(&contributions).expect("front is nonempty")]
    };
    population.remove(victim);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(f: [f64; 2]) -> Individual {
        Individual::evaluated(vec![0.0], f.to_vec())
    }

    /// Exclusive rectangles of a sorted mutually nondominated 2D front.
    fn rectangle_oracle(front: &[[f64; 2]], reference: [f64; 2]) -> Vec<f64> {
        (0..front.len())
            .map(|i| {
                let right = if i + 1 < front.len() { front[i + 1][0] } else { reference[0] };
                let up = if i > 0 { front[i - 1][1] } else { reference[1] };
                (right - front[i][0]) * (up - front[i][1])
            })
            .collect()
    }

    #[test]
    fn removes_smallest_contributor_of_last_front() {
        let front = [[1.0, 3.0], [2.8, 2.8], [3.0, 1.0]];
        // Nadir (3, 3) plus the offset.
        let oracle = rectangle_oracle(&front, [4.0, 4.0]);
        assert!(oracle[1] < oracle[0] && oracle[1] < oracle[2]);
        let mut pop: Vec<Individual> = front.iter().map(|f| ind(*f)).collect();
        reduce(&mut pop).unwrap();
        assert_eq!(pop, vec![ind([1.0, 3.0]), ind([3.0, 1.0])]);
    }

    #[test]
    fn dominated_singleton_front_is_removed() {
        let mut pop = vec![ind([1.0, 3.0]), ind([2.0, 2.0]), ind([3.0, 1.0]), ind([2.5, 2.5])];
        reduce(&mut pop).unwrap();
        assert_eq!(pop, vec![ind([1.0, 3.0]), ind([2.0, 2.0]), ind([3.0, 1.0])]);
    }

    #[test]
    fn contribution_ties_remove_lowest_index() {
        let mut pop = vec![ind([1.0, 2.0]), ind([2.0, 1.0])];
        reduce(&mut pop).unwrap();
        assert_eq!(pop, vec![ind([2.0, 1.0])]);
    }
}
