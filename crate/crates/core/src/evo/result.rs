use serde::{Deserialize, Serialize};

use super::{DeConfig, NsgaConfig};
use crate::model::{ObjectiveVector, RecipeVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "nsga2")]
    Nsga2,
    #[serde(rename = "de-best1")]
    DeBest1,
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::DeBest1 => "de-best1",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: RecipeVector,
    pub objectives: ObjectiveVector,
    /// Index of the non-dominated front, 0 being the best.
    pub rank: usize,
    #[serde(with = "crowding_serde")]
    pub crowding: f64,
}

impl Individual {
    pub fn new(genome: Vec<f64>, objectives: ObjectiveVector) -> Self {
        Self {
            genome: RecipeVector(genome),
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    }

    pub fn overall_error(&self) -> f64 {
        self.objectives.overall_error()
    }
}

/// JSON has no infinity; boundary crowding values are written as `"inf"`.
mod crowding_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            Repr::Tag("inf".into()).serialize(s)
        } else {
            Repr::Finite(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(v),
            Repr::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Lowest overall error in the population after selection.
    pub best_e: f64,
    pub front0_size: usize,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum EngineConfig {
    #[serde(rename = "nsga2")]
    Nsga2(NsgaConfig),
    #[serde(rename = "de-best1")]
    DeBest1(DeConfig),
}

impl EngineConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            EngineConfig::Nsga2(_) => Algorithm::Nsga2,
            EngineConfig::DeBest1(_) => Algorithm::DeBest1,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            EngineConfig::Nsga2(c) => c.seed,
            EngineConfig::DeBest1(c) => c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config: EngineConfig,
    pub evaluations_used: u64,
    pub final_population: Vec<Individual>,
    pub trace: Vec<GenerationStats>,
}

impl RunResult {
    pub fn front0(&self) -> impl Iterator<Item = &Individual> {
        self.final_population.iter().filter(|i| i.rank == 0)
    }

    pub fn best_error(&self) -> f64 {
        self.final_population
            .iter()
            .map(Individual::overall_error)
            .fold(f64::INFINITY, f64::min)
    }
}
