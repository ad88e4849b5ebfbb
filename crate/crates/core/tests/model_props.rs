use proptest::prelude::*;
use revbrew::io::Workspace;
use revbrew::model::{
    compute_abv, compute_fg, compute_ibu_fermentables, compute_ibu_hops, compute_mcu, compute_og,
    compute_srm, evaluate_recipe, BrewConfig, ColorModel, Inventory, RecipeVector,
};

fn stock() -> Inventory {
    Workspace::builtin().inventory
}

/// Genomes drawn uniformly inside the shipped stock bounds.
fn genome() -> impl Strategy<Value = Vec<f64>> {
    let upper = stock().upper_bounds();
    upper
        .into_iter()
        .map(|u| (0.0..=1.0f64).prop_map(move |t| t * u))
        .collect::<Vec<_>>()
}

fn brew_configs() -> impl Strategy<Value = BrewConfig> {
    (0.3..1.0f64, 10.0..40.0f64, prop::bool::ANY).prop_map(|(eff, batch, per_ingredient)| {
        BrewConfig {
            efficiency: eff,
            batch_size: batch,
            color_model: if per_ingredient {
                ColorModel::MoreyPerIngredient
            } else {
                ColorModel::Morey
            },
            ..BrewConfig::default()
        }
    })
}

const HOPS: usize = 5;
const FERMENTABLES: std::ops::Range<usize> = 5..15;
const YEAST: usize = 15;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fg_never_exceeds_og(g in genome(), cfg in brew_configs()) {
        let p = evaluate_recipe(&RecipeVector(g), &stock(), &cfg).unwrap();
        prop_assert!(p.fg <= p.og);
        prop_assert!(p.abv >= 0.0);
    }

    #[test]
    fn ebc_is_exactly_scaled_srm(g in genome(), cfg in brew_configs()) {
        let p = evaluate_recipe(&RecipeVector(g), &stock(), &cfg).unwrap();
        prop_assert_eq!(p.ebc, p.srm * 1.97);
    }

    #[test]
    fn fermentables_never_lower_og_mcu_srm(
        g in genome(),
        cfg in brew_configs(),
        k in FERMENTABLES,
        bump in 0.0..1.0f64,
    ) {
        let inv = stock();
        let mut more = g.clone();
        more[k] += bump * (inv.upper_bounds()[k] - g[k]);
        let (a, b) = (RecipeVector(g), RecipeVector(more));
        prop_assert!(compute_og(&b, &inv, &cfg).unwrap() >= compute_og(&a, &inv, &cfg).unwrap());
        prop_assert!(compute_mcu(&b, &inv, &cfg).unwrap() >= compute_mcu(&a, &inv, &cfg).unwrap());
        prop_assert!(compute_srm(&b, &inv, &cfg).unwrap() >= compute_srm(&a, &inv, &cfg).unwrap());
    }

    #[test]
    fn hops_never_lower_ibu(
        g in genome(),
        cfg in brew_configs(),
        k in 0..HOPS,
        bump in 0.0..1.0f64,
        og in 1.0..1.2f64,
    ) {
        let inv = stock();
        let mut more = g.clone();
        more[k] += bump * (inv.upper_bounds()[k] - g[k]);
        let before = compute_ibu_hops(&RecipeVector(g), &inv, og, &cfg).unwrap();
        let after = compute_ibu_hops(&RecipeVector(more), &inv, og, &cfg).unwrap();
        prop_assert!(after >= before);
    }

    #[test]
    fn yeast_volume_is_inert(g in genome(), cfg in brew_configs(), v in 0.0..=0.011f64) {
        let inv = stock();
        let mut other = g.clone();
        other[YEAST] = v;
        let a = evaluate_recipe(&RecipeVector(g), &inv, &cfg).unwrap();
        let b = evaluate_recipe(&RecipeVector(other), &inv, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn og_excess_is_linear_in_fermentables(g in genome(), cfg in brew_configs()) {
        let inv = stock();
        let mut half = g.clone();
        for k in FERMENTABLES {
            half[k] *= 0.5;
        }
        let full = compute_og(&RecipeVector(g), &inv, &cfg).unwrap() - 1.0;
        let halved = compute_og(&RecipeVector(half), &inv, &cfg).unwrap() - 1.0;
        prop_assert!((full - 2.0 * halved).abs() <= 1e-12);
    }

    #[test]
    fn mcu_and_hop_ibu_are_additive(g in genome(), cfg in brew_configs(), og in 1.0..1.2f64) {
        let inv = stock();
        let dim = inv.dimension();
        let single = |k: usize| {
            let mut v = vec![0.0; dim];
            v[k] = g[k];
            RecipeVector(v)
        };
        let whole = RecipeVector(g.clone());
        let mcu_sum: f64 = FERMENTABLES.map(|k| compute_mcu(&single(k), &inv, &cfg).unwrap()).sum();
        prop_assert!((compute_mcu(&whole, &inv, &cfg).unwrap() - mcu_sum).abs() <= 1e-9);
        let ibu_sum: f64 = (0..HOPS).map(|k| compute_ibu_hops(&single(k), &inv, og, &cfg).unwrap()).sum();
        prop_assert!((compute_ibu_hops(&whole, &inv, og, &cfg).unwrap() - ibu_sum).abs() <= 1e-9);
    }

    #[test]
    fn fermentable_ibu_is_additive(
        g in genome(),
        coeffs in prop::collection::vec(0.0..5.0f64, 10),
    ) {
        let mut inv = stock();
        for (f, c) in inv.fermentables.iter_mut().zip(&coeffs) {
            f.ibu_gal_per_lb = *c;
        }
        let cfg = BrewConfig::default();
        let dim = inv.dimension();
        let total = compute_ibu_fermentables(&RecipeVector(g.clone()), &inv, &cfg).unwrap();
        let parts: f64 = FERMENTABLES
            .map(|k| {
                let mut v = vec![0.0; dim];
                v[k] = g[k];
                compute_ibu_fermentables(&RecipeVector(v), &inv, &cfg).unwrap()
            })
            .sum();
        prop_assert!((total - parts).abs() <= 1e-9);
    }

    #[test]
    fn fg_below_og_for_any_attenuation(og in 1.0..1.69f64, att in 0.0..=1.0f64) {
        let fg = compute_fg(og, att).unwrap();
        prop_assert!(fg <= og && fg >= 1.0);
        prop_assert!(compute_abv(og, fg).unwrap() >= 0.0);
    }
}

#[test]
fn zero_recipe_identities() {
    let inv = stock();
    for cfg in [
        BrewConfig::default(),
        BrewConfig {
            color_model: ColorModel::MoreyPerIngredient,
            ..BrewConfig::default()
        },
    ] {
        let p = evaluate_recipe(&RecipeVector::zeros(inv.dimension()), &inv, &cfg).unwrap();
        assert_eq!(p.og, 1.0);
        assert_eq!(p.fg, 1.0);
        assert_eq!(p.abv, 0.0);
        assert_eq!(p.ibu, 0.0);
        assert_eq!(p.ibu_gu, None);
        assert_eq!(p.mcu, 0.0);
        assert_eq!(p.srm, 0.0);
        assert_eq!(p.ebc, 0.0);
    }
}

#[test]
fn shipped_fermentables_add_no_bitterness() {
    let inv = stock();
    let full = RecipeVector(inv.upper_bounds());
    let ibu = compute_ibu_fermentables(&full, &inv, &BrewConfig::default()).unwrap();
    assert_eq!(ibu, 0.0);
}
