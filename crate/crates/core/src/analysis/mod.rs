//! Post-run statistics: success filtering, per-run deviations, pairwise
//! genome distances, cross-run aggregation and failure diagnostics.
//!
//! Standard deviations use the population formula (divide by n).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evo::{Bounds, RunResult};
use crate::model::{ObjectiveVector, RecipeVector};
use crate::par;

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("at least one run is required")]
    NoRuns,
    #[error("solution {index} has {got} components, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
}

/// A genome together with its objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub genome: RecipeVector,
    pub objectives: ObjectiveVector,
}

impl Solution {
    pub fn overall_error(&self) -> f64 {
        self.objectives.overall_error()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub population_size: usize,
    pub nondominated_count: usize,
    pub successful_count: usize,
    /// Lowest overall error anywhere in the final population.
    pub best_e: f64,
    /// Front-0 members with `e <= threshold`, in population order.
    pub successful: Vec<Solution>,
}

/// Counts the first front and, within it, the members with `e <= threshold`.
pub fn summarize_run(result: &RunResult, threshold: f64) -> RunSummary {
    let front0: Vec<_> = result.front0().collect();
    let successful: Vec<Solution> = front0
        .iter()
        .filter(|i| i.overall_error() <= threshold)
        .map(|i| Solution {
            genome: i.genome.clone(),
            objectives: i.objectives,
        })
        .collect();
    RunSummary {
        population_size: result.final_population.len(),
        nondominated_count: front0.len(),
        successful_count: successful.len(),
        best_e: result.best_error(),
        successful,
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation; 0 for a single value.
pub fn population_stdev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Spread of a successful set. Both fields are `None` ("NA") when the set is
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub per_objective_stdev: Option<[f64; 3]>,
    pub per_dimension_stdev: Option<Vec<f64>>,
}

impl DeviationReport {
    pub fn na() -> Self {
        Self {
            per_objective_stdev: None,
            per_dimension_stdev: None,
        }
    }

    pub fn is_na(&self) -> bool {
        self.per_objective_stdev.is_none()
    }
}

pub fn deviation_report(successful: &[Solution]) -> DeviationReport {
    if successful.is_empty() {
        return DeviationReport::na();
    }
    let column = |f: &dyn Fn(&Solution) -> f64| {
        population_stdev(&successful.iter().map(f).collect::<Vec<_>>())
    };
    let objectives = [
        column(&|s| s.objectives.f1),
        column(&|s| s.objectives.f2),
        column(&|s| s.objectives.f3),
    ];
    let dim = successful[0].genome.len();
    let dims = (0..dim).map(|d| column(&|s| s.genome.0[d])).collect();
    DeviationReport {
        per_objective_stdev: Some(objectives),
        per_dimension_stdev: Some(dims),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest pairwise distance (0 for fewer than two solutions).
    pub fn max_distance(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }
}

fn check_dimensions(solutions: &[&[f64]]) -> Result<(), AnalysisError> {
    if let Some(first) = solutions.first() {
        let expected = first.len();
        for (index, s) in solutions.iter().enumerate() {
            if s.len() != expected {
                return Err(AnalysisError::DimensionMismatch {
                    index,
                    expected,
                    got: s.len(),
                });
            }
        }
    }
    Ok(())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distances between raw genomes (kg, L). Symmetric with an exact
/// zero diagonal. Labels default to the solution index.
pub fn distance_matrix(
    solutions: &[&[f64]],
    labels: Option<Vec<String>>,
) -> Result<DistanceMatrix, AnalysisError> {
    check_dimensions(solutions)?;
    let n = solutions.len();
    let rows: Vec<usize> = (0..n).collect();
    // upper triangle computed once and mirrored so symmetry is exact
    let upper = par::map(&rows, |&i| {
        (i + 1..n)
            .map(|j| euclidean(solutions[i], solutions[j]))
            .collect::<Vec<_>>()
    });
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    let labels = labels.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
    Ok(DistanceMatrix { labels, values })
}

/// Same as [`distance_matrix`] after scaling every coordinate to
/// `(x - lower) / (upper - lower)`; zero-width dimensions map to 0.
pub fn normalized_distance_matrix(
    solutions: &[&[f64]],
    bounds: &Bounds,
    labels: Option<Vec<String>>,
) -> Result<DistanceMatrix, AnalysisError> {
    check_dimensions(solutions)?;
    if let Some(first) = solutions.first() {
        if first.len() != bounds.dimension() {
            return Err(AnalysisError::DimensionMismatch {
                index: 0,
                expected: bounds.dimension(),
                got: first.len(),
            });
        }
    }
    let scaled: Vec<Vec<f64>> = solutions
        .iter()
        .map(|s| {
            s.iter()
                .zip(bounds.lower.iter().zip(&bounds.upper))
                .map(|(x, (lo, hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
    distance_matrix(&refs, labels)
}

/// Solution-count statistics over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub runs_with_success: usize,
    pub nondominated_median: f64,
    pub nondominated_stdev: f64,
    pub successful_median: f64,
    pub successful_stdev: f64,
    /// Mean of the per-run deviation reports over runs that have one.
    pub mean_deviation: DeviationReport,
}

/// Medians and standard deviations of the per-run counts (over every run,
/// including those without successes) and the cross-run mean deviation.
pub fn aggregate_runs(summaries: &[RunSummary]) -> Result<Aggregate, AnalysisError> {
    if summaries.is_empty() {
        return Err(AnalysisError::NoRuns);
    }
    let nd: Vec<f64> = summaries.iter().map(|s| s.nondominated_count as f64).collect();
    let ok: Vec<f64> = summaries.iter().map(|s| s.successful_count as f64).collect();
    let reports: Vec<DeviationReport> = summaries
        .iter()
        .map(|s| deviation_report(&s.successful))
        .filter(|r| !r.is_na())
        .collect();
    let mean_deviation = if reports.is_empty() {
        DeviationReport::na()
    } else {
        let k = reports.len() as f64;
        let mut obj = [0.0; 3];
        let dim = reports[0].per_dimension_stdev.as_ref().map_or(0, Vec::len);
        let mut dims = vec![0.0; dim];
        for r in &reports {
            for (acc, v) in obj.iter_mut().zip(r.per_objective_stdev.unwrap()) {
                *acc += v / k;
            }
            for (acc, v) in dims.iter_mut().zip(r.per_dimension_stdev.as_ref().unwrap()) {
                *acc += v / k;
            }
        }
        DeviationReport {
            per_objective_stdev: Some(obj),
            per_dimension_stdev: Some(dims),
        }
    };
    Ok(Aggregate {
        runs: summaries.len(),
        runs_with_success: summaries.iter().filter(|s| s.successful_count > 0).count(),
        nondominated_median: median(&nd),
        nondominated_stdev: population_stdev(&nd),
        successful_median: median(&ok),
        successful_stdev: population_stdev(&ok),
        mean_deviation,
    })
}

/// Mean (f1, f2, f3) over every first-front individual of every run. Shows
/// which objective keeps a product from being reached. `None` without any
/// individuals.
pub fn failure_diagnostics(results: &[RunResult]) -> Option<ObjectiveVector> {
    let mut sum = [0.0; 3];
    let mut count = 0usize;
    for ind in results.iter().flat_map(RunResult::front0) {
        for (acc, v) in sum.iter_mut().zip(ind.objectives.as_array()) {
            *acc += v;
        }
        count += 1;
    }
    (count > 0).then(|| {
        let c = count as f64;
        ObjectiveVector::new(sum[0] / c, sum[1] / c, sum[2] / c)
    })
}

/// The successful solution with the lowest overall error, ties going to the
/// earliest one.
pub fn best_successful(summary: &RunSummary) -> Option<&Solution> {
    summary
        .successful
        .iter()
        .fold(None, |best: Option<&Solution>, s| match best {
            Some(b) if b.overall_error() <= s.overall_error() => Some(b),
            _ => Some(s),
        })
}

/// One representative per run (see [`best_successful`]); runs without a
/// success contribute nothing.
pub fn sample_per_run(summaries: &[RunSummary]) -> Vec<Solution> {
    summaries
        .iter()
        .filter_map(|s| best_successful(s).cloned())
        .collect()
}

/// Heat-map rows: one row per solution, one column per ingredient, raw uptakes.
pub fn heatmap(solutions: &[Solution]) -> Vec<Vec<f64>> {
    solutions.iter().map(|s| s.genome.0.clone()).collect()
}
