//! Seeded evolutionary search engines.
//!
//! [`nsga2`] minimises the three distance objectives jointly; [`de`] runs
//! DE/best/1/bin on their sum. A single run is strictly sequential: every
//! random draw comes from one [`EngineRng`] seeded from the run's 64-bit
//! seed, so a fixed seed reproduces a run bit for bit on any platform and
//! any thread count.

mod de;
mod dominance;
mod nsga2;
mod operators;
mod problem;
mod result;

pub use de::{de_best1_run, run_de, DeConfig};
pub use dominance::{
    crowding_distance, crowding_distances, dominates, fast_nondominated_sort, sort_fronts,
};
pub use nsga2::{nsga2_run, run_nsga2, NsgaConfig};
pub use operators::{polynomial_mutation, sbx_crossover};
pub use problem::{Bounds, BrewProblem, Problem};
pub use result::{Algorithm, EngineConfig, GenerationStats, Individual, RunResult};

use rand::SeedableRng;
use thiserror::Error;

use crate::model::ModelError;

/// The generator behind every engine: ChaCha with 8 rounds, seeded through
/// `SeedableRng::seed_from_u64`. Its output stream is fixed by the
/// `rand_chacha` crate and does not depend on platform or endianness.
pub type EngineRng = rand_chacha::ChaCha8Rng;

pub fn engine_rng(seed: u64) -> EngineRng {
    EngineRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvoError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] ModelError),
    #[error("population is empty")]
    EmptyPopulation,
}
