use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dominance::{crowding_distances, sort_fronts};
use super::{
    engine_rng, Algorithm, BrewProblem, EngineConfig, EvoError, GenerationStats, Individual,
    Problem, RunResult,
};
use crate::model::{BrewConfig, Inventory, TargetProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeConfig {
    pub population_size: usize,
    /// Differential weight F.
    pub f_weight: f64,
    /// Binomial crossover rate.
    pub cr: f64,
    pub max_evaluations: u64,
    /// The run stops once some individual reaches `e <= success_threshold`.
    pub success_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

impl DeConfig {
    /// Population 100, F 0.5, CR 0.5, 100 000 evaluations, threshold 0.05.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            population_size: 100,
            f_weight: 0.5,
            cr: 0.5,
            max_evaluations: 100_000,
            success_threshold: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvoError> {
        let bad = |msg: String| Err(EvoError::InvalidConfig(msg));
        if self.population_size < 4 {
            return bad(format!("population_size must be >= 4, got {}", self.population_size));
        }
        if !(0.0..=2.0).contains(&self.f_weight) {
            return bad(format!("f_weight must lie in [0, 2], got {}", self.f_weight));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return bad(format!("cr must lie in [0, 1], got {}", self.cr));
        }
        if !(self.success_threshold >= 0.0) {
            return bad(format!(
                "success_threshold must be >= 0, got {}",
                self.success_threshold
            ));
        }
        Ok(())
    }
}

fn best_index(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, f) in fitness.iter().enumerate() {
        if *f < fitness[best] {
            best = i;
        }
    }
    best
}

/// DE/best/1/bin minimising `e = f1 + f2 + f3`.
///
/// `initial` genomes, clamped to bounds, take the first population slots; the
/// rest are drawn uniformly. Evaluations are counted from initialisation on.
/// The success threshold is checked once after initialisation and then after
/// every complete selection sweep.
pub fn run_de<P: Problem + ?Sized>(
    problem: &P,
    cfg: &DeConfig,
    initial: Option<&[Vec<f64>]>,
    observer: &mut dyn FnMut(&GenerationStats),
) -> Result<RunResult, EvoError> {
    cfg.validate()?;
    let bounds = problem.bounds();
    let dim = bounds.dimension();
    let n = cfg.population_size;
    let mut rng = engine_rng(cfg.seed);

    let mut genomes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for g in initial.unwrap_or(&[]).iter().take(n) {
        if g.len() != dim {
            return Err(EvoError::InvalidConfig(format!(
                "initial genome has {} components, expected {dim}",
                g.len()
            )));
        }
        let mut g = g.clone();
        bounds.clamp(&mut g);
        genomes.push(g);
    }
    while genomes.len() < n {
        genomes.push(
            bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect(),
        );
    }

    let mut evaluations = 0u64;
    let mut objectives = Vec::with_capacity(n);
    for g in &genomes {
        objectives.push(problem.evaluate(g)?);
        evaluations += 1;
    }
    let mut fitness: Vec<f64> = objectives.iter().map(|o| o.overall_error()).collect();

    let mut trace = Vec::new();
    let mut generation = 0;
    let mut trial = vec![0.0; dim];
    while fitness[best_index(&fitness)] > cfg.success_threshold
        && evaluations < cfg.max_evaluations
    {
        generation += 1;
        let best = genomes[best_index(&fitness)].clone();
        let mut next_genomes = genomes.clone();
        for i in 0..n {
            if evaluations >= cfg.max_evaluations {
                break;
            }
            let r1 = loop {
                let r = rng.random_range(0..n);
                if r != i {
                    break r;
                }
            };
            let r2 = loop {
                let r = rng.random_range(0..n);
                if r != i && r != r1 {
                    break r;
                }
            };
            let forced = rng.random_range(0..dim);
            for j in 0..dim {
                let take_mutant = rng.random::<f64>() < cfg.cr || j == forced;
                trial[j] = if take_mutant {
                    best[j] + cfg.f_weight * (genomes[r1][j] - genomes[r2][j])
                } else {
                    genomes[i][j]
                };
            }
            bounds.clamp(&mut trial);
            let obj = problem.evaluate(&trial)?;
            evaluations += 1;
            let e = obj.overall_error();
            if e <= fitness[i] {
                next_genomes[i].copy_from_slice(&trial);
                objectives[i] = obj;
                fitness[i] = e;
            }
        }
        genomes = next_genomes;

        let s = GenerationStats {
            generation,
            best_e: fitness[best_index(&fitness)],
            front0_size: sort_fronts(
                &objectives.iter().map(|o| o.as_array()).collect::<Vec<_>>(),
            )[0]
            .len(),
            evaluations,
        };
        observer(&s);
        trace.push(s);
    }

    let mut final_population: Vec<Individual> = genomes
        .into_iter()
        .zip(objectives)
        .map(|(g, o)| Individual::new(g, o))
        .collect();
    let points: Vec<[f64; 3]> = final_population
        .iter()
        .map(|i| i.objectives.as_array())
        .collect();
    for (rank, front) in sort_fronts(&points).iter().enumerate() {
        let pts: Vec<[f64; 3]> = front.iter().map(|&i| points[i]).collect();
        for (&i, c) in front.iter().zip(crowding_distances(&pts)) {
            final_population[i].rank = rank;
            final_population[i].crowding = c;
        }
    }

    Ok(RunResult {
        algorithm: Algorithm::DeBest1,
        seed: cfg.seed,
        config: EngineConfig::DeBest1(cfg.clone()),
        evaluations_used: evaluations,
        final_population,
        trace,
    })
}

/// DE/best/1 over the brewing objectives for one target.
pub fn de_best1_run(
    target: &TargetProfile,
    inventory: &Inventory,
    brew: &BrewConfig,
    cfg: &DeConfig,
) -> Result<RunResult, EvoError> {
    let problem = BrewProblem::new(inventory.clone(), brew.clone(), target.clone())?;
    run_de(&problem, cfg, None, &mut |_| {})
}
