use serde::{Deserialize, Serialize};

use super::EvoError;
use crate::model::{
    check_genome, evaluate_genome, objectives, BrewConfig, Inventory, ObjectiveVector,
    TargetProfile,
};

/// Box constraints on a genome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, EvoError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(EvoError::InvalidConfig(format!(
                "bounds need matching non-empty lower/upper vectors, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(EvoError::InvalidConfig(format!(
                    "dimension {i}: invalid interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[0, upper_i]` for every dimension.
    pub fn from_upper(upper: Vec<f64>) -> Result<Self, EvoError> {
        Self::new(vec![0.0; upper.len()], upper)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, genome: &mut [f64]) {
        for ((x, lo), hi) in genome.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, genome: &[f64]) -> bool {
        genome.len() == self.dimension()
            && genome
                .iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((x, lo), hi)| *x >= *lo && *x <= *hi)
    }
}

/// Something the engines can minimise: a bounded genome mapped onto three
/// objectives.
pub trait Problem: Sync {
    fn bounds(&self) -> &Bounds;
    fn evaluate(&self, genome: &[f64]) -> Result<ObjectiveVector, EvoError>;
}

/// The recipe reverse-engineering problem: stock bounds from the inventory,
/// objectives from the forward brewing model against one target.
#[derive(Debug, Clone)]
pub struct BrewProblem {
    inventory: Inventory,
    brew: BrewConfig,
    target: TargetProfile,
    bounds: Bounds,
}

impl BrewProblem {
    pub fn new(
        inventory: Inventory,
        brew: BrewConfig,
        target: TargetProfile,
    ) -> Result<Self, EvoError> {
        inventory.validate()?;
        brew.validate()?;
        target.validate()?;
        let bounds = Bounds::from_upper(inventory.upper_bounds())?;
        Ok(Self {
            inventory,
            brew,
            target,
            bounds,
        })
    }

    pub fn inventory(&self) -> &Inventory {
        &self.inventory
    }

    pub fn brew(&self) -> &BrewConfig {
        &self.brew
    }

    pub fn target(&self) -> &TargetProfile {
        &self.target
    }
}

impl Problem for BrewProblem {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, genome: &[f64]) -> Result<ObjectiveVector, EvoError> {
        check_genome(genome, &self.inventory)?;
        let props = evaluate_genome(genome, &self.inventory, &self.brew)?;
        Ok(objectives(&props, &self.target))
    }
}
