//! CSV reports. Missing values (products without successes) are written as `NA`.

use std::path::Path;

use serde::Serialize;

use super::{write_atomic, IoError};
use crate::analysis::{Aggregate, DistanceMatrix, Solution};
use crate::evo::Algorithm;
use crate::model::ObjectiveVector;

/// Aggregated statistics for one (product, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub product: usize,
    pub name: String,
    pub algorithm: Algorithm,
    pub aggregate: Aggregate,
    /// Mean front-0 objectives; reported for products with no success at all.
    pub diagnostics: Option<ObjectiveVector>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

fn write_rows(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    write_atomic(path, &bytes)
}

fn head(row: &TableRow) -> Vec<String> {
    vec![
        row.product.to_string(),
        row.name.clone(),
        row.algorithm.tag().to_string(),
    ]
}

fn header(extra: &[&str]) -> Vec<String> {
    ["product", "name", "algorithm"]
        .iter()
        .chain(extra)
        .map(|s| s.to_string())
        .collect()
}

/// Non-dominated and successful counts: median and standard deviation.
pub fn write_counts_csv(path: &Path, rows: &[TableRow]) -> Result<(), IoError> {
    let body = rows
        .iter()
        .map(|r| {
            let a = &r.aggregate;
            let mut v = head(r);
            v.extend([
                num(a.nondominated_median),
                num(a.nondominated_stdev),
                num(a.successful_median),
                num(a.successful_stdev),
                a.runs.to_string(),
                a.runs_with_success.to_string(),
            ]);
            v
        })
        .collect();
    write_rows(
        path,
        header(&[
            "nondominated_median",
            "nondominated_stdev",
            "successful_median",
            "successful_stdev",
            "runs",
            "runs_with_success",
        ]),
        body,
    )
}

/// Mean per-run standard deviation of f1, f2, f3 over successful solutions.
pub fn write_deviation_csv(path: &Path, rows: &[TableRow]) -> Result<(), IoError> {
    let body = rows
        .iter()
        .map(|r| {
            let s = r.aggregate.mean_deviation.per_objective_stdev;
            let mut v = head(r);
            v.extend((0..3).map(|k| opt(s.map(|a| a[k]))));
            v
        })
        .collect();
    write_rows(path, header(&["f1_stdev", "f2_stdev", "f3_stdev"]), body)
}

/// Mean front-0 objectives for products that never succeeded.
pub fn write_failures_csv(path: &Path, rows: &[TableRow]) -> Result<(), IoError> {
    let body = rows
        .iter()
        .filter(|r| r.aggregate.runs_with_success == 0)
        .map(|r| {
            let mut v = head(r);
            let d = r.diagnostics.map(|o| o.as_array());
            v.extend((0..3).map(|k| opt(d.map(|a| a[k]))));
            v
        })
        .collect();
    write_rows(path, header(&["f1", "f2", "f3"]), body)
}

/// Mean per-run standard deviation of every ingredient uptake.
pub fn write_uptake_deviation_csv(path: &Path, rows: &[TableRow], dimension: usize) -> Result<(), IoError> {
    let cols: Vec<String> = (1..=dimension).map(|i| format!("x{i}")).collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let body = rows
        .iter()
        .map(|r| {
            let d = r.aggregate.mean_deviation.per_dimension_stdev.as_ref();
            let mut v = head(r);
            v.extend((0..dimension).map(|k| opt(d.and_then(|d| d.get(k).copied()))));
            v
        })
        .collect();
    write_rows(path, header(&col_refs), body)
}

/// Square matrix with a label column and a label header.
pub fn write_distance_matrix_csv(path: &Path, m: &DistanceMatrix) -> Result<(), IoError> {
    let mut hdr = vec![String::new()];
    hdr.extend(m.labels.iter().cloned());
    let body = m
        .labels
        .iter()
        .zip(&m.values)
        .map(|(label, row)| {
            let mut v = vec![label.clone()];
            v.extend(row.iter().map(|&x| num(x)));
            v
        })
        .collect();
    write_rows(path, hdr, body)
}

/// One row per solution, one column per ingredient, then the objectives.
pub fn write_heatmap_csv(
    path: &Path,
    ingredient_names: &[&str],
    solutions: &[Solution],
) -> Result<(), IoError> {
    let mut hdr: Vec<String> = ingredient_names.iter().map(|s| s.to_string()).collect();
    hdr.extend(["f1", "f2", "f3", "e"].map(String::from));
    let body = solutions
        .iter()
        .map(|s| {
            let mut v: Vec<String> = s.genome.0.iter().map(|&x| num(x)).collect();
            v.extend(s.objectives.as_array().map(num));
            v.push(num(s.overall_error()));
            v
        })
        .collect();
    write_rows(path, hdr, body)
}
