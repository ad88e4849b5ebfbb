//! Brewing property model.
//!
//! Maps an ingredient uptake vector onto beer properties (OG, FG, ABV, IBU,
//! IBU/GU, MCU, SRM, EBC) and scores those properties against a target
//! profile with three distance objectives.
//!
//! Genomes are stored in kilograms for hops and fermentables and in litres for
//! yeast. The hop bitterness term is evaluated in grams and litres; the
//! fermentable terms (extract, IBU gal/lb, colour) in pounds and US gallons.

mod equations;
mod objectives;

pub(crate) use equations::evaluate_genome;
pub use equations::{
    compute_abv, compute_fg, compute_ibu_fermentables, compute_ibu_gu, compute_ibu_hops,
    compute_mcu, compute_og, compute_srm, evaluate_recipe, srm_to_ebc, EBC_PER_SRM, KG_TO_LB,
    L_TO_GAL, MAX_OG, PPG_SUCROSE,
};
pub use objectives::{objectives, overall_error, ObjectiveVector};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("recipe has {got} components but the inventory defines {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("recipe component {index} = {value} lies outside [0, {bound}]")]
    OutOfBounds { index: usize, value: f64, bound: f64 },
    #[error("volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("attenuation must lie in [0, 1], got {0}")]
    AttenuationOutOfRange(f64),
    #[error("original gravity {0} is outside the supported range [1.0, {MAX_OG})")]
    GravityOutOfRange(f64),
    #[error("final gravity {fg} exceeds original gravity {og}")]
    FinalAboveOriginal { og: f64, fg: f64 },
    #[error("IBU/GU is undefined when OG = 1.0")]
    UndefinedRatio,
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn check_range(field: &str, value: f64, lo: f64, hi: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in [{lo}, {hi}], got {value}")))
    }
}

fn check_non_negative(field: &str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be >= 0, got {value}")))
    }
}

/// A hop variety held in stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopAddition {
    pub name: String,
    /// Stock bound in kg.
    pub max_weight: f64,
    /// Alpha acids, percent.
    pub alpha: f64,
    /// Beta acids, percent. Carried for completeness; no equation consumes it.
    pub beta: f64,
    /// Boil time in minutes.
    pub boil_time: f64,
}

/// A fermentable held in stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermentableAddition {
    pub name: String,
    /// Stock bound in kg.
    pub max_weight: f64,
    /// Colour in degrees Lovibond.
    pub color: f64,
    pub yield_pct: f64,
    pub moisture_pct: f64,
    #[serde(default)]
    pub ibu_gal_per_lb: f64,
}

/// A yeast strain held in stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YeastPitch {
    pub name: String,
    /// Stock bound in L.
    pub max_volume: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub attenuation_pct: f64,
}

impl HopAddition {
    fn validate(&self, at: &str) -> Result<(), ModelError> {
        check_non_negative(&format!("{at}.max_weight"), self.max_weight)?;
        check_range(&format!("{at}.alpha"), self.alpha, 0.0, 100.0)?;
        check_range(&format!("{at}.beta"), self.beta, 0.0, 100.0)?;
        check_non_negative(&format!("{at}.boil_time"), self.boil_time)
    }
}

impl FermentableAddition {
    fn validate(&self, at: &str) -> Result<(), ModelError> {
        check_non_negative(&format!("{at}.max_weight"), self.max_weight)?;
        check_non_negative(&format!("{at}.color"), self.color)?;
        check_range(&format!("{at}.yield_pct"), self.yield_pct, 0.0, 100.0)?;
        let moisture = self.moisture_pct;
        if !(moisture.is_finite() && (0.0..100.0).contains(&moisture)) {
            return Err(invalid(
                format!("{at}.moisture_pct"),
                format!("must lie in [0, 100), got {moisture}"),
            ));
        }
        check_non_negative(&format!("{at}.ibu_gal_per_lb"), self.ibu_gal_per_lb)
    }
}

impl YeastPitch {
    fn validate(&self, at: &str) -> Result<(), ModelError> {
        check_non_negative(&format!("{at}.max_volume"), self.max_volume)?;
        if !(self.temp_min.is_finite() && self.temp_max.is_finite())
            || self.temp_min > self.temp_max
        {
            return Err(invalid(
                format!("{at}.temp_min"),
                format!(
                    "must not exceed temp_max ({} > {})",
                    self.temp_min, self.temp_max
                ),
            ));
        }
        check_range(
            &format!("{at}.attenuation_pct"),
            self.attenuation_pct,
            0.0,
            100.0,
        )
    }
}

/// Ingredient stock. Defines the search space: one dimension per ingredient,
/// ordered hops, then fermentables, then yeasts, each bounded by its stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    #[serde(default, rename = "hop")]
    pub hops: Vec<HopAddition>,
    #[serde(default, rename = "fermentable")]
    pub fermentables: Vec<FermentableAddition>,
    #[serde(default, rename = "yeast")]
    pub yeasts: Vec<YeastPitch>,
}

impl Inventory {
    pub fn dimension(&self) -> usize {
        self.hops.len() + self.fermentables.len() + self.yeasts.len()
    }

    /// Upper bound of every dimension, in genome order. Lower bounds are zero.
    pub fn upper_bounds(&self) -> Vec<f64> {
        self.hops
            .iter()
            .map(|h| h.max_weight)
            .chain(self.fermentables.iter().map(|f| f.max_weight))
            .chain(self.yeasts.iter().map(|y| y.max_volume))
            .collect()
    }

    /// Ingredient names in genome order.
    pub fn names(&self) -> Vec<&str> {
        self.hops
            .iter()
            .map(|h| h.name.as_str())
            .chain(self.fermentables.iter().map(|f| f.name.as_str()))
            .chain(self.yeasts.iter().map(|y| y.name.as_str()))
            .collect()
    }

    /// Genome index of the ingredient called `name`, if any.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| *n == name)
    }

    /// Mutable stock bound of the named ingredient (kg, or L for yeast).
    pub fn stock_mut(&mut self, name: &str) -> Option<&mut f64> {
        if let Some(h) = self.hops.iter_mut().find(|h| h.name == name) {
            return Some(&mut h.max_weight);
        }
        if let Some(f) = self.fermentables.iter_mut().find(|f| f.name == name) {
            return Some(&mut f.max_weight);
        }
        self.yeasts
            .iter_mut()
            .find(|y| y.name == name)
            .map(|y| &mut y.max_volume)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.fermentables.is_empty() {
            return Err(invalid(
                "fermentable",
                "at least one fermentable is required (OG is unreachable otherwise)",
            ));
        }
        if self.yeasts.is_empty() {
            return Err(invalid(
                "yeast",
                "at least one yeast is required (FG needs an attenuation)",
            ));
        }
        for (i, h) in self.hops.iter().enumerate() {
            h.validate(&format!("hop[{i}]"))?;
        }
        for (i, f) in self.fermentables.iter().enumerate() {
            f.validate(&format!("fermentable[{i}]"))?;
        }
        for (i, y) in self.yeasts.iter().enumerate() {
            y.validate(&format!("yeast[{i}]"))?;
        }
        unique_names("hop", self.hops.iter().map(|h| h.name.as_str()))?;
        unique_names("fermentable", self.fermentables.iter().map(|f| f.name.as_str()))?;
        unique_names("yeast", self.yeasts.iter().map(|y| y.name.as_str()))
    }
}

fn unique_names<'a>(list: &str, names: impl Iterator<Item = &'a str>) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::new();
    for (i, name) in names.enumerate() {
        if !seen.insert(name) {
            return Err(invalid(
                format!("{list}[{i}].name"),
                format!("duplicate name {name:?}"),
            ));
        }
    }
    Ok(())
}

/// How colour is derived from malt colour units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorModel {
    /// `SRM = 1.4922 * MCU^0.6859` on the aggregate MCU.
    #[default]
    Morey,
    /// `SRM = 1.4922 * sum(c_i * w_i^0.6859) / v`, exponent applied to each
    /// fermentable weight separately.
    MoreyPerIngredient,
}

/// Brewhouse settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrewConfig {
    /// Mash extraction efficiency, fraction in (0, 1].
    pub efficiency: f64,
    /// Batch volume in L. This is the `v` of every volume-dependent formula.
    pub batch_size: f64,
    /// Boil volume in L. Recorded, not used by any formula.
    pub boil_size: f64,
    /// Boil time in minutes.
    pub boil_time: f64,
    #[serde(default)]
    pub color_model: ColorModel,
}

impl Default for BrewConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.58,
            batch_size: 20.0,
            boil_size: 24.0,
            boil_time: 60.0,
            color_model: ColorModel::Morey,
        }
    }
}

impl BrewConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid(
                "brew.efficiency",
                format!("must lie in (0, 1], got {}", self.efficiency),
            ));
        }
        if !(self.batch_size.is_finite() && self.batch_size > 0.0) {
            return Err(ModelError::NonPositiveVolume(self.batch_size));
        }
        check_non_negative("brew.boil_size", self.boil_size)?;
        check_non_negative("brew.boil_time", self.boil_time)
    }

    pub(crate) fn batch_gal(&self) -> Result<f64, ModelError> {
        if self.batch_size.is_finite() && self.batch_size > 0.0 {
            Ok(self.batch_size * L_TO_GAL)
        } else {
            Err(ModelError::NonPositiveVolume(self.batch_size))
        }
    }
}

/// One candidate solution: an uptake per inventory dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecipeVector(pub Vec<f64>);

impl RecipeVector {
    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks length and `0 <= x_i <= bound_i` against the inventory.
    pub fn check(&self, inventory: &Inventory) -> Result<(), ModelError> {
        check_genome(&self.0, inventory)
    }
}

impl From<Vec<f64>> for RecipeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub(crate) fn check_genome(genome: &[f64], inventory: &Inventory) -> Result<(), ModelError> {
    let expected = inventory.dimension();
    if genome.len() != expected {
        return Err(ModelError::DimensionMismatch {
            expected,
            got: genome.len(),
        });
    }
    let bounds = inventory
        .hops
        .iter()
        .map(|h| h.max_weight)
        .chain(inventory.fermentables.iter().map(|f| f.max_weight))
        .chain(inventory.yeasts.iter().map(|y| y.max_volume));
    for (index, (&value, bound)) in genome.iter().zip(bounds).enumerate() {
        if !(value >= 0.0 && value <= bound) {
            return Err(ModelError::OutOfBounds {
                index,
                value,
                bound,
            });
        }
    }
    Ok(())
}

/// Desired properties of a product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetProfile {
    pub name: String,
    pub og: f64,
    pub fg: f64,
    pub abv: f64,
    pub ibu: f64,
    pub srm: f64,
}

impl TargetProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        let at = |f: &str| format!("target {:?}.{f}", self.name);
        if !(self.og.is_finite() && self.og >= 1.0) {
            return Err(invalid(at("og"), format!("must be >= 1.0, got {}", self.og)));
        }
        if !(self.fg.is_finite() && self.fg >= 1.0) {
            return Err(invalid(at("fg"), format!("must be >= 1.0, got {}", self.fg)));
        }
        if self.fg > self.og {
            return Err(invalid(
                at("fg"),
                format!("must not exceed og ({} > {})", self.fg, self.og),
            ));
        }
        check_non_negative(&at("abv"), self.abv)?;
        check_non_negative(&at("ibu"), self.ibu)?;
        check_non_negative(&at("srm"), self.srm)
    }
}

/// Properties predicted for a recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeerProperties {
    pub og: f64,
    pub fg: f64,
    pub abv: f64,
    pub ibu: f64,
    /// `None` when OG = 1.0.
    pub ibu_gu: Option<f64>,
    pub mcu: f64,
    pub srm: f64,
    pub ebc: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hop() -> HopAddition {
        HopAddition {
            name: "Cascade".into(),
            max_weight: 0.1,
            alpha: 6.0,
            beta: 6.0,
            boil_time: 60.0,
        }
    }

    fn malt(name: &str) -> FermentableAddition {
        FermentableAddition {
            name: name.into(),
            max_weight: 7.0,
            color: 3.0,
            yield_pct: 78.0,
            moisture_pct: 0.0,
            ibu_gal_per_lb: 0.0,
        }
    }

    fn yeast() -> YeastPitch {
        YeastPitch {
            name: "S-04".into(),
            max_volume: 0.011,
            temp_min: 15.0,
            temp_max: 24.0,
            attenuation_pct: 75.0,
        }
    }

    #[test]
    fn inventory_layout_is_hops_fermentables_yeasts() {
        let inv = Inventory {
            hops: vec![hop()],
            fermentables: vec![malt("Pale"), malt("Munich")],
            yeasts: vec![yeast()],
        };
        inv.validate().unwrap();
        assert_eq!(inv.dimension(), 4);
        assert_eq!(inv.upper_bounds(), vec![0.1, 7.0, 7.0, 0.011]);
        assert_eq!(inv.index_of("Munich"), Some(2));
    }

    #[test]
    fn negative_weight_names_the_field() {
        let mut bad = malt("Pale");
        bad.max_weight = -1.0;
        let inv = Inventory {
            hops: vec![],
            fermentables: vec![malt("Crystal"), bad],
            yeasts: vec![yeast()],
        };
        match inv.validate() {
            Err(ModelError::Invalid { field, .. }) => assert_eq!(field, "fermentable[1].max_weight"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_fermentables_rejected() {
        let inv = Inventory {
            hops: vec![hop()],
            fermentables: vec![],
            yeasts: vec![yeast()],
        };
        assert!(inv.validate().is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let inv = Inventory {
            hops: vec![],
            fermentables: vec![malt("Pale"), malt("Pale")],
            yeasts: vec![yeast()],
        };
        let err = inv.validate().unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn yeast_temperature_order_enforced() {
        let mut y = yeast();
        y.temp_min = 30.0;
        assert!(y.validate("yeast[0]").is_err());
    }

    #[test]
    fn recipe_bounds_checked() {
        let inv = Inventory {
            hops: vec![hop()],
            fermentables: vec![malt("Pale")],
            yeasts: vec![yeast()],
        };
        assert!(RecipeVector(vec![0.1, 7.0, 0.0]).check(&inv).is_ok());
        assert!(matches!(
            RecipeVector(vec![0.2, 7.0, 0.0]).check(&inv),
            Err(ModelError::OutOfBounds { index: 0, .. })
        ));
        assert!(matches!(
            RecipeVector(vec![0.1, 7.0]).check(&inv),
            Err(ModelError::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(RecipeVector(vec![f64::NAN, 0.0, 0.0]).check(&inv).is_err());
    }

    #[test]
    fn brew_config_rejects_degenerate_volume() {
        let cfg = BrewConfig {
            batch_size: 0.0,
            ..BrewConfig::default()
        };
        assert_eq!(cfg.validate(), Err(ModelError::NonPositiveVolume(0.0)));
        let cfg = BrewConfig {
            efficiency: 0.0,
            ..BrewConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn target_validation() {
        let mut t = TargetProfile {
            name: "x".into(),
            og: 1.05,
            fg: 1.01,
            abv: 5.0,
            ibu: 30.0,
            srm: 10.0,
        };
        assert!(t.validate().is_ok());
        t.fg = 1.06;
        assert!(t.validate().is_err());
        t.fg = 0.99;
        assert!(t.validate().is_err());
    }
}
