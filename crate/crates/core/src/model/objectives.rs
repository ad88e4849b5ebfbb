use serde::{Deserialize, Serialize};

use super::{BeerProperties, TargetProfile};

/// Distances of a recipe's properties from a target, all to be minimised.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Euclidean distance over (OG, FG, ABV) in raw units.
    pub f1: f64,
    /// |IBU - target IBU|.
    pub f2: f64,
    /// |SRM - target SRM|.
    pub f3: f64,
}

impl ObjectiveVector {
    pub const fn new(f1: f64, f2: f64, f3: f64) -> Self {
        Self { f1, f2, f3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }

    pub fn overall_error(&self) -> f64 {
        overall_error(self)
    }
}

impl From<[f64; 3]> for ObjectiveVector {
    fn from([f1, f2, f3]: [f64; 3]) -> Self {
        Self { f1, f2, f3 }
    }
}

pub fn objectives(props: &BeerProperties, target: &TargetProfile) -> ObjectiveVector {
    let d_og = props.og - target.og;
    let d_fg = props.fg - target.fg;
    let d_abv = props.abv - target.abv;
    ObjectiveVector {
        f1: (d_og * d_og + d_fg * d_fg + d_abv * d_abv).sqrt(),
        f2: (props.ibu - target.ibu).abs(),
        f3: (props.srm - target.srm).abs(),
    }
}

/// `e = f1 + f2 + f3`. Used for success classification and as the scalar
/// fitness of the single-objective engine; the multi-objective engine never
/// looks at it.
pub fn overall_error(obj: &ObjectiveVector) -> f64 {
    obj.f1 + obj.f2 + obj.f3
}
