use super::{check_genome, BeerProperties, BrewConfig, ColorModel, Inventory, ModelError, RecipeVector};

pub const KG_TO_LB: f64 = 2.20462;
pub const L_TO_GAL: f64 = 0.264172;
/// Points per pound per gallon of pure sucrose.
pub const PPG_SUCROSE: f64 = 46.214;
pub const EBC_PER_SRM: f64 = 1.97;
/// Gravities at or above this are rejected; the ABV formula is singular at 1.775.
pub const MAX_OG: f64 = 1.7;

const MOREY_SCALE: f64 = 1.4922;
const MOREY_EXPONENT: f64 = 0.6859;

fn hop_slice<'a>(genome: &'a [f64], inv: &Inventory) -> &'a [f64] {
    &genome[..inv.hops.len()]
}

fn fermentable_slice<'a>(genome: &'a [f64], inv: &Inventory) -> &'a [f64] {
    let start = inv.hops.len();
    &genome[start..start + inv.fermentables.len()]
}

/// Original gravity from the extract potential of the fermentables.
pub fn compute_og(
    recipe: &RecipeVector,
    inventory: &Inventory,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    check_genome(recipe.values(), inventory)?;
    og_unchecked(recipe.values(), inventory, config)
}

fn og_unchecked(genome: &[f64], inv: &Inventory, config: &BrewConfig) -> Result<f64, ModelError> {
    let gal = config.batch_gal()?;
    let points: f64 = fermentable_slice(genome, inv)
        .iter()
        .zip(&inv.fermentables)
        .map(|(&kg, f)| {
            kg * KG_TO_LB * PPG_SUCROSE * (f.yield_pct / 100.0) * (1.0 - f.moisture_pct / 100.0)
        })
        .sum();
    Ok(1.0 + config.efficiency * points / (gal * 1000.0))
}

/// `FG = OG - (OG - 1) * attenuation`, attenuation as a fraction.
pub fn compute_fg(og: f64, attenuation: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&attenuation) {
        return Err(ModelError::AttenuationOutOfRange(attenuation));
    }
    if !(og >= 1.0 && og < MAX_OG) {
        return Err(ModelError::GravityOutOfRange(og));
    }
    Ok(og - (og - 1.0) * attenuation)
}

/// `ABV = 76.08 (OG - FG) FG / (0.794 (1.775 - OG))`.
pub fn compute_abv(og: f64, fg: f64) -> Result<f64, ModelError> {
    if !(og >= 1.0 && og < MAX_OG) {
        return Err(ModelError::GravityOutOfRange(og));
    }
    if fg > og {
        return Err(ModelError::FinalAboveOriginal { og, fg });
    }
    Ok(76.08 * (og - fg) * fg / (0.794 * (1.775 - og)))
}

/// Hop bitterness (Tinseth form) with weights in grams and volume in litres.
pub fn compute_ibu_hops(
    recipe: &RecipeVector,
    inventory: &Inventory,
    og: f64,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    check_genome(recipe.values(), inventory)?;
    ibu_hops_unchecked(recipe.values(), inventory, og, config)
}

fn ibu_hops_unchecked(
    genome: &[f64],
    inv: &Inventory,
    og: f64,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    let litres = config.batch_size;
    if !(litres.is_finite() && litres > 0.0) {
        return Err(ModelError::NonPositiveVolume(litres));
    }
    let utilisation_sum: f64 = hop_slice(genome, inv)
        .iter()
        .zip(&inv.hops)
        .map(|(&kg, h)| {
            let grams = kg * 1000.0;
            10.0 * grams * h.alpha * (1.0 - (-0.04 * h.boil_time).exp()) / (4.15 * litres)
        })
        .sum();
    Ok(utilisation_sum * 1.65 * 0.000125_f64.powf(og - 1.0))
}

/// Bitterness contributed by fermentables, `sum(g_i * w_i) / v` in lb and gal.
pub fn compute_ibu_fermentables(
    recipe: &RecipeVector,
    inventory: &Inventory,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    check_genome(recipe.values(), inventory)?;
    ibu_fermentables_unchecked(recipe.values(), inventory, config)
}

fn ibu_fermentables_unchecked(
    genome: &[f64],
    inv: &Inventory,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    let gal = config.batch_gal()?;
    let sum: f64 = fermentable_slice(genome, inv)
        .iter()
        .zip(&inv.fermentables)
        .map(|(&kg, f)| f.ibu_gal_per_lb * kg * KG_TO_LB)
        .sum();
    Ok(sum / gal)
}

/// `IBU / (1000 (OG - 1))`.
pub fn compute_ibu_gu(og: f64, ibu: f64) -> Result<f64, ModelError> {
    if og <= 1.0 {
        return Err(ModelError::UndefinedRatio);
    }
    Ok(ibu / (1000.0 * (og - 1.0)))
}

/// Malt colour units, `sum(c_i * w_i) / v` in degrees Lovibond, lb and gal.
pub fn compute_mcu(
    recipe: &RecipeVector,
    inventory: &Inventory,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    check_genome(recipe.values(), inventory)?;
    mcu_unchecked(recipe.values(), inventory, config)
}

fn mcu_unchecked(genome: &[f64], inv: &Inventory, config: &BrewConfig) -> Result<f64, ModelError> {
    let gal = config.batch_gal()?;
    let sum: f64 = fermentable_slice(genome, inv)
        .iter()
        .zip(&inv.fermentables)
        .map(|(&kg, f)| f.color * kg * KG_TO_LB)
        .sum();
    Ok(sum / gal)
}

/// Beer colour in SRM under the configured [`ColorModel`].
pub fn compute_srm(
    recipe: &RecipeVector,
    inventory: &Inventory,
    config: &BrewConfig,
) -> Result<f64, ModelError> {
    check_genome(recipe.values(), inventory)?;
    srm_unchecked(recipe.values(), inventory, config, None)
}

fn srm_unchecked(
    genome: &[f64],
    inv: &Inventory,
    config: &BrewConfig,
    mcu: Option<f64>,
) -> Result<f64, ModelError> {
    match config.color_model {
        ColorModel::Morey => {
            let mcu = match mcu {
                Some(m) => m,
                None => mcu_unchecked(genome, inv, config)?,
            };
            Ok(MOREY_SCALE * mcu.powf(MOREY_EXPONENT))
        }
        ColorModel::MoreyPerIngredient => {
            let gal = config.batch_gal()?;
            let sum: f64 = fermentable_slice(genome, inv)
                .iter()
                .zip(&inv.fermentables)
                .map(|(&kg, f)| f.color * (kg * KG_TO_LB).powf(MOREY_EXPONENT))
                .sum();
            Ok(MOREY_SCALE * sum / gal)
        }
    }
}

pub fn srm_to_ebc(srm: f64) -> f64 {
    srm * EBC_PER_SRM
}

/// Full forward model. The yeast dimension does not enter any formula;
/// attenuation comes from the first yeast strain in the inventory.
pub fn evaluate_recipe(
    recipe: &RecipeVector,
    inventory: &Inventory,
    config: &BrewConfig,
) -> Result<BeerProperties, ModelError> {
    check_genome(recipe.values(), inventory)?;
    evaluate_genome(recipe.values(), inventory, config)
}

/// [`evaluate_recipe`] without the length/bounds check. The caller guarantees
/// `genome.len() == inventory.dimension()`.
pub(crate) fn evaluate_genome(
    genome: &[f64],
    inv: &Inventory,
    config: &BrewConfig,
) -> Result<BeerProperties, ModelError> {
    let yeast = inv.yeasts.first().ok_or_else(|| {
        super::invalid("yeast", "at least one yeast is required")
    })?;
    let og = og_unchecked(genome, inv, config)?;
    let fg = compute_fg(og, yeast.attenuation_pct / 100.0)?;
    let abv = compute_abv(og, fg)?;
    let ibu = ibu_hops_unchecked(genome, inv, og, config)?
        + ibu_fermentables_unchecked(genome, inv, config)?;
    let ibu_gu = compute_ibu_gu(og, ibu).ok();
    let mcu = mcu_unchecked(genome, inv, config)?;
    let srm = srm_unchecked(genome, inv, config, Some(mcu))?;
    Ok(BeerProperties {
        og,
        fg,
        abv,
        ibu,
        ibu_gu,
        mcu,
        srm,
        ebc: srm_to_ebc(srm),
    })
}
