use super::{evaluate_individual, initial_population, AlgorithmConfig, AlgorithmKind, Monitor, Preselector, Streams};
use crate::dominance::select_rmmeda;
use crate::error::{invalid_config, Result};
use crate::problems::Problem;
use crate::types::{DecisionVector, EvaluationBudget, Individual, RandomSource};
use crate::variation::{build_regularity_model, sample_regularity_model};

/// RM-MEDA: regularity-model sampling with density-based truncation.
///
/// Under CPS each of the N offspring slots draws M model samples and evaluates
/// only the preselected one, so both variants spend N evaluations per generation.
pub fn run_rmmeda(
    cfg: &AlgorithmConfig,
    problem: &dyn Problem,
    budget: &mut EvaluationBudget,
    rng: &mut RandomSource,
    monitor: &mut dyn Monitor,
) -> Result<Vec<Individual>> {
    if cfg.kind != AlgorithmKind::Rmmeda {
        return Err(invalid_config("run_rmmeda called with a different algorithm kind"));
    }
    cfg.validate()?;
    let n = cfg.population_size;
    let latent_dim = problem.n_objectives() - 1;
    // Keep every cluster large enough to fit its latent directions.
    let mut params = cfg.regularity;
    params.n_clusters = params.n_clusters.min(n / (latent_dim + 2)).max(1);
    if n < latent_dim + 2 {
        return Err(invalid_config("population too small for the regularity model"));
    }

    let mut streams = Streams::new(rng);
    let mut population = initial_population(problem, n, budget, &mut streams.init)?;
    let mut preselector = cfg.cps_enabled.then(|| Preselector::new(cfg));
    let mut last_offspring = population.clone();
    monitor.observe(budget.used_fes(), &population);

    while !budget.is_exhausted() {
        if let Some(p) = preselector.as_mut() {
            p.refresh(&last_offspring, problem, monitor)?;
        }
        let xs: Vec<DecisionVector> = population.iter().map(|p| p.x.clone()).collect();
        let model = build_regularity_model(&xs, latent_dim, &params, &mut streams.model)?;
        let slots = (n as u64).min(budget.remaining()) as usize;
        let mut offspring = Vec::with_capacity(slots);
        for _ in 0..slots {
            let x = match &preselector {
                Some(p) => {
                    let mut candidates =
                        sample_regularity_model(&model, cfg.candidates, problem.bounds(), &mut streams.variation);
                    let chosen = p.choose(&candidates, problem, &mut streams.preselect, monitor)?;
                    candidates.swap_remove(chosen)
                }
                None => sample_regularity_model(&model, 1, problem.bounds(), &mut streams.variation).remove(0),
            };
            offspring.push(evaluate_individual(problem, budget, x)?);
        }
        let mut merged = population;
        merged.extend(offspring.iter().cloned());
        population = select_rmmeda(&merged, n)?;
        last_offspring = offspring;
        monitor.observe(budget.used_fes(), &population);
    }
    Ok(population)
}
