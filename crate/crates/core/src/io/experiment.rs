use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::reports::{
    write_distance_matrix_csv, write_heatmap_csv, write_counts_csv, write_deviation_csv,
    write_failures_csv, write_uptake_deviation_csv, TableRow,
};
use super::{product_slug, write_atomic, IoError, RunRecord, Workspace};
use crate::analysis::{
    aggregate_runs, best_successful, distance_matrix, failure_diagnostics,
    normalized_distance_matrix, sample_per_run, summarize_run, Aggregate, AnalysisError,
    DistanceMatrix, RunSummary, Solution, DEFAULT_SUCCESS_THRESHOLD,
};
use crate::evo::{de_best1_run, nsga2_run, Algorithm, Bounds, RunResult};
use crate::model::{ObjectiveVector, TargetProfile};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProductSelection {
    All,
    /// Product numbers or names, as accepted by [`Workspace::resolve_product`].
    List(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Nsga2,
    De,
    Both,
}

impl AlgorithmChoice {
    fn algorithms(self) -> &'static [Algorithm] {
        match self {
            AlgorithmChoice::Nsga2 => &[Algorithm::Nsga2],
            AlgorithmChoice::De => &[Algorithm::DeBest1],
            AlgorithmChoice::Both => &[Algorithm::Nsga2, Algorithm::DeBest1],
        }
    }
}

impl std::str::FromStr for AlgorithmChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nsga2" => Ok(Self::Nsga2),
            "de" | "de-best1" => Ok(Self::De),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown algorithm {s:?} (expected nsga2, de or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub products: ProductSelection,
    pub algorithm: AlgorithmChoice,
    pub runs: usize,
    /// Run `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    pub threshold: f64,
    pub out_dir: PathBuf,
    /// Worker cap; `None` uses every core.
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            products: ProductSelection::All,
            algorithm: AlgorithmChoice::Nsga2,
            runs: 30,
            base_seed: 1,
            threshold: DEFAULT_SUCCESS_THRESHOLD,
            out_dir: out_dir.into(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub product: usize,
    pub algorithm: Algorithm,
    pub run_index: usize,
    pub seed: u64,
    /// The result file, or why the run produced none.
    pub result: Result<PathBuf, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub outcomes: Vec<RunOutcome>,
    pub analysis: AnalysisOutput,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &RunOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }
}

/// Statistics for one (product, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAnalysis {
    pub product: usize,
    pub name: String,
    pub algorithm: Algorithm,
    pub aggregate: Aggregate,
    pub diagnostics: Option<ObjectiveVector>,
    /// Largest distance among the successful solutions of the first run that
    /// has at least two of them.
    pub single_run_max_distance: Option<f64>,
    /// Largest distance among per-run best successful solutions.
    pub multi_run_max_distance: Option<f64>,
    #[serde(skip)]
    pub summaries: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutput {
    pub groups: Vec<GroupAnalysis>,
    pub files: Vec<PathBuf>,
}

fn run_file(out_dir: &Path, product: usize, name: &str, algo: Algorithm, run: usize) -> PathBuf {
    out_dir
        .join(product_slug(product, name))
        .join(algo.tag())
        .join(format!("run-{run:03}.json"))
}

struct Task<'a> {
    product: usize,
    target: &'a TargetProfile,
    algorithm: Algorithm,
    run_index: usize,
    seed: u64,
}

/// Executes every (product, algorithm, run) combination, writes one result
/// file per successful run and then the aggregate reports.
///
/// A run that fails is recorded in the report; its siblings carry on.
pub fn run_experiment(plan: &ExperimentPlan, ws: &Workspace) -> Result<ExperimentReport, IoError> {
    if plan.runs == 0 {
        return Err(IoError::Config(crate::evo::EvoError::InvalidConfig(
            "run count must be at least 1".into(),
        )));
    }
    let products: Vec<(usize, &TargetProfile)> = match &plan.products {
        ProductSelection::All => ws.targets.iter().enumerate().map(|(i, t)| (i + 1, t)).collect(),
        ProductSelection::List(sel) => sel
            .iter()
            .map(|s| ws.resolve_product(s))
            .collect::<Result<_, _>>()?,
    };

    let mut tasks = Vec::new();
    for &(product, target) in &products {
        for &algorithm in plan.algorithm.algorithms() {
            for run_index in 0..plan.runs {
                tasks.push(Task {
                    product,
                    target,
                    algorithm,
                    run_index,
                    seed: plan.base_seed.wrapping_add(run_index as u64),
                });
            }
        }
    }

    let execute = |t: &Task| -> (RunOutcome, Option<RunRecord>) {
        let result = match t.algorithm {
            Algorithm::Nsga2 => nsga2_run(t.target, &ws.inventory, &ws.brew, &ws.nsga2_config(t.seed)),
            Algorithm::DeBest1 => {
                let mut cfg = ws.de_config(t.seed);
                cfg.success_threshold = plan.threshold;
                de_best1_run(t.target, &ws.inventory, &ws.brew, &cfg)
            }
        };
        let outcome = |result| RunOutcome {
            product: t.product,
            algorithm: t.algorithm,
            run_index: t.run_index,
            seed: t.seed,
            result,
        };
        let record = match result {
            Ok(result) => RunRecord {
                product: t.product,
                run_index: t.run_index,
                target: t.target.clone(),
                inventory: ws.inventory.clone(),
                brew: ws.brew.clone(),
                result,
            },
            Err(e) => return (outcome(Err(e.to_string())), None),
        };
        let path = run_file(&plan.out_dir, t.product, &t.target.name, t.algorithm, t.run_index);
        match record.write(&path) {
            Ok(()) => (outcome(Ok(path)), Some(record)),
            Err(e) => (outcome(Err(e.to_string())), None),
        }
    };

    let done = par::with_threads(plan.threads, || par::map(&tasks, execute));
    let mut outcomes = Vec::with_capacity(done.len());
    let mut records = Vec::new();
    for (o, r) in done {
        outcomes.push(o);
        records.extend(r);
    }
    let analysis = analyze_records(&records, plan.threshold, false, &plan.out_dir)?;
    Ok(ExperimentReport { outcomes, analysis })
}

fn collect_run_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), IoError> {
    let entries = fs::read_dir(dir).map_err(|e| IoError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for entry in entries {
        let entry = entry.map_err(|e| IoError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let path = entry.path();
        if path.is_dir() {
            collect_run_files(&path, out)?;
        } else if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("run-") && n.ends_with(".json"))
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Every `run-*.json` below `dir`, ordered by product, algorithm and run.
pub fn load_run_records(dir: &Path) -> Result<Vec<RunRecord>, IoError> {
    let mut paths = Vec::new();
    collect_run_files(dir, &mut paths)?;
    let mut records = paths
        .iter()
        .map(|p| RunRecord::read(p))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|a, b| {
        (a.product, a.result.algorithm.tag(), a.run_index).cmp(&(
            b.product,
            b.result.algorithm.tag(),
            b.run_index,
        ))
    });
    Ok(records)
}

/// Re-derives the reports from the result files under `dir` and writes them
/// next to those files.
pub fn analyze_results(dir: &Path, threshold: f64, normalize_genome: bool) -> Result<AnalysisOutput, IoError> {
    let records = load_run_records(dir)?;
    if records.is_empty() {
        return Err(IoError::Parse {
            file: dir.display().to_string(),
            message: "no run-*.json result files found".into(),
        });
    }
    analyze_records(&records, threshold, normalize_genome, dir)
}

fn analysis_error(e: AnalysisError) -> IoError {
    IoError::Parse {
        file: "results".into(),
        message: e.to_string(),
    }
}

fn matrix(
    solutions: &[Solution],
    bounds: Option<&Bounds>,
    labels: Vec<String>,
) -> Result<DistanceMatrix, IoError> {
    let refs: Vec<&[f64]> = solutions.iter().map(|s| s.genome.values()).collect();
    match bounds {
        Some(b) => normalized_distance_matrix(&refs, b, Some(labels)),
        None => distance_matrix(&refs, Some(labels)),
    }
    .map_err(analysis_error)
}

fn analyze_records(
    records: &[RunRecord],
    threshold: f64,
    normalize_genome: bool,
    out_dir: &Path,
) -> Result<AnalysisOutput, IoError> {
    let mut groups: Vec<(usize, Algorithm, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|(p, a, _)| *p == r.product && *a == r.result.algorithm)
        {
            Some((_, _, v)) => v.push(r),
            None => groups.push((r.product, r.result.algorithm, vec![r])),
        }
    }
    groups.sort_by_key(|(p, a, _)| (*p, a.tag()));

    let mut files = Vec::new();
    let mut out = Vec::new();
    for (product, algorithm, runs) in groups {
        let first = runs[0];
        let summaries: Vec<RunSummary> = runs
            .iter()
            .map(|r| summarize_run(&r.result, threshold))
            .collect();
        let aggregate = aggregate_runs(&summaries).map_err(analysis_error)?;
        let results: Vec<RunResult> = runs.iter().map(|r| r.result.clone()).collect();
        let diagnostics = failure_diagnostics(&results);
        let bounds = if normalize_genome {
            Some(Bounds::from_upper(first.inventory.upper_bounds())?)
        } else {
            None
        };
        let names = first.inventory.names();
        let dir = out_dir.join(product_slug(product, &first.target.name)).join(algorithm.tag());

        let mut single_run_max_distance = None;
        if let Some(s) = summaries.iter().find(|s| s.successful.len() >= 2) {
            let labels = (0..s.successful.len()).map(|i| format!("s{i}")).collect();
            let m = matrix(&s.successful, bounds.as_ref(), labels)?;
            single_run_max_distance = Some(m.max_distance());
            let p = dir.join("distance-single-run.csv");
            write_distance_matrix_csv(&p, &m)?;
            files.push(p);
            let p = dir.join("heatmap-single-run.csv");
            write_heatmap_csv(&p, &names, &s.successful)?;
            files.push(p);
        }

        let sampled = sample_per_run(&summaries);
        let mut multi_run_max_distance = None;
        if sampled.len() >= 2 {
            let labels = runs
                .iter()
                .zip(&summaries)
                .filter(|(_, s)| best_successful(s).is_some())
                .map(|(r, _)| format!("run{}", r.run_index))
                .collect();
            let m = matrix(&sampled, bounds.as_ref(), labels)?;
            multi_run_max_distance = Some(m.max_distance());
            let p = dir.join("distance-multi-run.csv");
            write_distance_matrix_csv(&p, &m)?;
            files.push(p);
            let p = dir.join("heatmap-multi-run.csv");
            write_heatmap_csv(&p, &names, &sampled)?;
            files.push(p);
        }

        out.push(GroupAnalysis {
            product,
            name: first.target.name.clone(),
            algorithm,
            aggregate,
            diagnostics,
            single_run_max_distance,
            multi_run_max_distance,
            summaries,
        });
    }

    let rows: Vec<TableRow> = out
        .iter()
        .map(|g| TableRow {
            product: g.product,
            name: g.name.clone(),
            algorithm: g.algorithm,
            aggregate: g.aggregate.clone(),
            diagnostics: g.diagnostics,
        })
        .collect();
    let dimension = records.first().map_or(0, |r| r.inventory.dimension());
    for (name, write) in [
        ("counts.csv", write_counts_csv as fn(&Path, &[TableRow]) -> Result<(), IoError>),
        ("objective-deviation.csv", write_deviation_csv),
        ("failure-diagnostics.csv", write_failures_csv),
    ] {
        let p = out_dir.join(name);
        write(&p, &rows)?;
        files.push(p);
    }
    let p = out_dir.join("uptake-deviation.csv");
    write_uptake_deviation_csv(&p, &rows, dimension)?;
    files.push(p);
    let p = out_dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&out).expect("summaries serialise");
    json.push('\n');
    write_atomic(&p, json.as_bytes())?;
    files.push(p);

    Ok(AnalysisOutput { groups: out, files })
}
