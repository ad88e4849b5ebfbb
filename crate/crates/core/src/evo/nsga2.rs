use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dominance::{crowding_distances, sort_fronts};
use super::operators::{forced_mutation, mutate_in_place, sbx_crossover};
use super::{
    engine_rng, Algorithm, BrewProblem, EngineConfig, EngineRng, EvoError, GenerationStats,
    Individual, Problem, RunResult,
};
use crate::model::{BrewConfig, Inventory, TargetProfile};

/// Genomes closer than this in every variable count as duplicates.
pub(crate) const DUPLICATE_TOLERANCE: f64 = 1e-12;
const REFILL_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsgaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    /// Per-variable mutation probability; `None` means `1 / dimension`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_prob: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl NsgaConfig {
    /// Population 100, 1000 generations, p_c 0.9, eta_c 15, eta_m 20,
    /// mutation probability 1/n.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            population_size: 100,
            generations: 1000,
            crossover_prob: 0.9,
            eta_c: 15.0,
            eta_m: 20.0,
            mutation_prob: None,
            seed,
        }
    }

    pub fn effective_mutation_prob(&self, dimension: usize) -> f64 {
        self.mutation_prob
            .unwrap_or_else(|| 1.0 / dimension.max(1) as f64)
    }

    pub fn validate(&self) -> Result<(), EvoError> {
        let bad = |msg: String| Err(EvoError::InvalidConfig(msg));
        if self.population_size < 2 {
            return bad(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(format!("crossover_prob must lie in [0, 1], got {}", self.crossover_prob));
        }
        if !(self.eta_c > 0.0 && self.eta_m > 0.0) {
            return bad(format!(
                "distribution indices must be positive, got eta_c={} eta_m={}",
                self.eta_c, self.eta_m
            ));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("mutation_prob must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

pub(crate) fn is_duplicate(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= DUPLICATE_TOLERANCE)
}

fn random_genome(problem: &(impl Problem + ?Sized), rng: &mut EngineRng) -> Vec<f64> {
    let b = problem.bounds();
    b.lower
        .iter()
        .zip(&b.upper)
        .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
        .collect()
}

/// Crowded binary tournament: lower rank wins, then larger crowding.
fn tournament(pop: &[Individual], rng: &mut EngineRng) -> usize {
    let n = pop.len();
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let (a, b) = (&pop[i], &pop[j]);
    if b.rank < a.rank || (b.rank == a.rank && b.crowding > a.crowding) {
        j
    } else {
        i
    }
}

/// Elitist environmental selection on (rank, crowding). Writes rank and
/// crowding (recomputed over the survivors of each front) onto the result.
fn environmental_selection(mut merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    let points: Vec<[f64; 3]> = merged.iter().map(|i| i.objectives.as_array()).collect();
    let fronts = sort_fronts(&points);
    let mut survivors: Vec<Vec<usize>> = Vec::new();
    let mut taken = 0;
    for front in fronts {
        if taken == size {
            break;
        }
        if taken + front.len() <= size {
            taken += front.len();
            survivors.push(front);
        } else {
            let pts: Vec<[f64; 3]> = front.iter().map(|&i| points[i]).collect();
            let crowd = crowding_distances(&pts);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
            let mut partial: Vec<usize> = order[..size - taken].iter().map(|&k| front[k]).collect();
            partial.sort_unstable();
            taken = size;
            survivors.push(partial);
        }
    }

    let mut next = Vec::with_capacity(size);
    for (rank, front) in survivors.iter().enumerate() {
        let pts: Vec<[f64; 3]> = front.iter().map(|&i| points[i]).collect();
        let crowd = crowding_distances(&pts);
        for (&i, c) in front.iter().zip(crowd) {
            let mut ind = std::mem::replace(
                &mut merged[i],
                Individual::new(Vec::new(), Default::default()),
            );
            ind.rank = rank;
            ind.crowding = c;
            next.push(ind);
        }
    }
    next
}

fn stats(pop: &[Individual], generation: usize, evaluations: u64) -> GenerationStats {
    GenerationStats {
        generation,
        best_e: pop
            .iter()
            .map(Individual::overall_error)
            .fold(f64::INFINITY, f64::min),
        front0_size: pop.iter().filter(|i| i.rank == 0).count(),
        evaluations,
    }
}

/// NSGA-II on any [`Problem`]. `observer` sees the summary of every
/// generation as soon as selection completes.
pub fn run_nsga2<P: Problem + ?Sized>(
    problem: &P,
    cfg: &NsgaConfig,
    observer: &mut dyn FnMut(&GenerationStats),
) -> Result<RunResult, EvoError> {
    cfg.validate()?;
    let bounds = problem.bounds();
    let dim = bounds.dimension();
    let n = cfg.population_size;
    let mutation_prob = cfg.effective_mutation_prob(dim);
    let mut rng = engine_rng(cfg.seed);
    let mut evaluations = 0u64;

    let mut genomes: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut attempts = 0;
    while genomes.len() < n {
        attempts += 1;
        if attempts > 100 * n {
            return Err(EvoError::InvalidConfig(format!(
                "search space cannot hold {n} distinct genomes"
            )));
        }
        let g = random_genome(problem, &mut rng);
        if !genomes.iter().any(|o| is_duplicate(o, &g)) {
            genomes.push(g);
        }
    }
    let mut initial = Vec::with_capacity(n);
    for g in genomes {
        let obj = problem.evaluate(&g)?;
        evaluations += 1;
        initial.push(Individual::new(g, obj));
    }
    let mut pop = environmental_selection(initial, n);

    let mut trace = Vec::with_capacity(cfg.generations);
    for generation in 1..=cfg.generations {
        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = tournament(&pop, &mut rng);
            let b = tournament(&pop, &mut rng);
            let (mut c1, mut c2) =
                sbx_crossover(&pop[a].genome.0, &pop[b].genome.0, bounds, cfg, &mut rng);
            mutate_in_place(&mut c1, bounds, mutation_prob, cfg.eta_m, &mut rng);
            mutate_in_place(&mut c2, bounds, mutation_prob, cfg.eta_m, &mut rng);
            offspring.push(c1);
            if offspring.len() < n {
                offspring.push(c2);
            }
        }

        let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
        for mut child in offspring {
            let mut tries = 0;
            let unique = loop {
                let clash = pop.iter().any(|p| is_duplicate(&p.genome.0, &child))
                    || accepted.iter().any(|o| is_duplicate(o, &child));
                if !clash {
                    break true;
                }
                if tries == REFILL_ATTEMPTS {
                    break false;
                }
                tries += 1;
                child = pop[rng.random_range(0..n)].genome.0.clone();
                forced_mutation(&mut child, bounds, mutation_prob, cfg.eta_m, &mut rng);
            };
            if unique {
                accepted.push(child);
            }
        }

        let mut merged = pop;
        merged.reserve(accepted.len());
        for g in accepted {
            let obj = problem.evaluate(&g)?;
            evaluations += 1;
            merged.push(Individual::new(g, obj));
        }
        pop = environmental_selection(merged, n);

        let s = stats(&pop, generation, evaluations);
        observer(&s);
        trace.push(s);
    }

    Ok(RunResult {
        algorithm: Algorithm::Nsga2,
        seed: cfg.seed,
        config: EngineConfig::Nsga2(cfg.clone()),
        evaluations_used: evaluations,
        final_population: pop,
        trace,
    })
}

/// NSGA-II over the brewing objectives for one target.
pub fn nsga2_run(
    target: &TargetProfile,
    inventory: &Inventory,
    brew: &BrewConfig,
    cfg: &NsgaConfig,
) -> Result<RunResult, EvoError> {
    let problem = BrewProblem::new(inventory.clone(), brew.clone(), target.clone())?;
    run_nsga2(&problem, cfg, &mut |_| {})
}
