//! Recipe reverse-engineering workbench.
//!
//! Given an ingredient inventory and target beer properties, search the
//! bounded space of ingredient uptakes with NSGA-II (three distance
//! objectives) or DE/best/1 (their sum), then analyse the resulting
//! solution sets.
//!
//! - [`model`]: forward brewing equations and objectives.
//! - [`evo`]: seeded evolutionary engines.
//! - [`analysis`]: success counts, deviations, distance matrices, diagnostics.
//! - [`io`]: workspace files, run result files, experiment orchestration.

pub mod analysis;
pub mod evo;
pub mod io;
pub mod model;
pub mod par;
