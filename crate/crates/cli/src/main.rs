use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use revbrew::analysis::{summarize_run, DEFAULT_SUCCESS_THRESHOLD};
use revbrew::evo::{de_best1_run, nsga2_run, EvoError, RunResult};
use revbrew::io::{
    analyze_results, product_slug, run_experiment, AlgorithmChoice, ExperimentPlan, GroupAnalysis,
    IoError, ProductSelection, RecipeFile, RunRecord, Workspace,
};
use revbrew::model::{evaluate_recipe, objectives, ModelError};
use revbrew::par;

/// Reverse-engineer beer recipes from target properties and ingredient stock.
#[derive(Debug, Parser)]
#[command(name = "revbrew", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict the properties of a recipe and score it against its target.
    Evaluate {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long)]
        recipe: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// One optimisation run for one product.
    Optimize {
        #[command(flatten)]
        ws: WorkspaceArg,
        /// Catalogue number (1-based) or exact name.
        #[arg(long)]
        product: String,
        #[arg(long, default_value = "nsga2", value_parser = ["nsga2", "de"])]
        algo: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        pop: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SUCCESS_THRESHOLD)]
        threshold: f64,
        /// Result file; defaults to `<product>-<algo>-seed<N>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent runs over many products; writes result files and reports.
    Batch {
        #[command(flatten)]
        ws: WorkspaceArg,
        /// `all` or a comma-separated list of numbers or names.
        #[arg(long, default_value = "all")]
        products: String,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        /// Base seed; run i uses seed + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "nsga2")]
        algo: AlgorithmChoice,
        #[arg(long, default_value_t = DEFAULT_SUCCESS_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[command(flatten)]
        threads: ThreadsArg,
    },
    /// Rebuild the reports from a directory of result files.
    Analyze {
        #[arg(long)]
        results: PathBuf,
        /// Scale every ingredient to its stock before measuring distances.
        #[arg(long)]
        normalize_genome: bool,
        #[arg(long, default_value_t = DEFAULT_SUCCESS_THRESHOLD)]
        threshold: f64,
    },
    /// Run the HTTP job service.
    Serve {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Where finished jobs are written; defaults to `<workspace>/jobs`.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        queue: usize,
        #[arg(long, default_value_t = 10)]
        progress_stride: usize,
        #[command(flatten)]
        threads: ThreadsArg,
    },
}

#[derive(Debug, Args)]
struct WorkspaceArg {
    /// Directory with inventory.toml, targets.toml and workbench.toml.
    /// Without it the shipped catalogue is used.
    #[arg(long)]
    workspace: Option<PathBuf>,
}

impl WorkspaceArg {
    fn load(&self) -> Result<Workspace, Failure> {
        match &self.workspace {
            Some(dir) => Ok(Workspace::load(dir)?),
            None => Ok(Workspace::builtin()),
        }
    }
}

#[derive(Debug, Args)]
struct ThreadsArg {
    /// Worker cap (default: every core).
    #[arg(long, env = "REVBREW_THREADS")]
    threads: Option<usize>,
}

enum Failure {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<EvoError> for Failure {
    fn from(e: EvoError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Evaluate { ws, recipe, json } => evaluate(&ws.load()?, &recipe, json),
        Command::Optimize {
            ws,
            product,
            algo,
            seed,
            generations,
            pop,
            threshold,
            out,
        } => {
            let ws = ws.load()?;
            optimize(&ws, &product, &algo, seed, generations, pop, threshold, out)
        }
        Command::Batch {
            ws,
            products,
            runs,
            seed,
            algo,
            threshold,
            out,
            threads,
        } => {
            if runs == 0 {
                return Err(Failure::Usage("--runs must be at least 1".into()));
            }
            let products = if products.trim() == "all" {
                ProductSelection::All
            } else {
                ProductSelection::List(products.split(',').map(|s| s.trim().to_string()).collect())
            };
            let plan = ExperimentPlan {
                products,
                algorithm: algo,
                runs,
                base_seed: seed,
                threshold,
                out_dir: out,
                threads: threads.threads,
            };
            batch(&ws.load()?, &plan)
        }
        Command::Analyze {
            results,
            normalize_genome,
            threshold,
        } => {
            let out = analyze_results(&results, threshold, normalize_genome)?;
            print_groups(&out.groups);
            println!("reports written to {}", results.display());
            Ok(())
        }
        Command::Serve {
            ws,
            port,
            host,
            results,
            queue,
            progress_stride,
            threads,
        } => {
            let workspace = ws.load()?;
            let results = match (results, &ws.workspace) {
                (Some(r), _) => r,
                (None, Some(dir)) => dir.join("jobs"),
                (None, None) => PathBuf::from("jobs"),
            };
            let config = revbrew_service::ServiceConfig {
                workspace,
                workspace_dir: ws.workspace.clone(),
                results_dir: results,
                queue_capacity: queue,
                progress_stride,
            };
            serve(config, SocketAddr::new(host, port), threads.threads)
        }
    }
}

fn evaluate(ws: &Workspace, path: &Path, json: bool) -> Result<(), Failure> {
    let recipe = RecipeFile::load(path)?;
    let (product, target) = ws.resolve_product(&recipe.target)?;
    let genome = recipe.to_vector(&ws.inventory)?;
    let props = evaluate_recipe(&genome, &ws.inventory, &ws.brew)?;
    let obj = objectives(&props, target);
    let e = obj.overall_error();
    if json {
        let v = serde_json::json!({
            "product": product,
            "target": target,
            "properties": props,
            "objectives": obj,
            "e": e,
            "successful": e <= DEFAULT_SUCCESS_THRESHOLD,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        return Ok(());
    }
    println!("target: {} (product {product})", target.name);
    println!("{:<8}{:>12}{:>12}", "", "predicted", "target");
    for (name, p, t) in [
        ("OG", props.og, target.og),
        ("FG", props.fg, target.fg),
        ("ABV", props.abv, target.abv),
        ("IBU", props.ibu, target.ibu),
        ("SRM", props.srm, target.srm),
    ] {
        println!("{name:<8}{p:>12.4}{t:>12.4}");
    }
    match props.ibu_gu {
        Some(r) => println!("{:<8}{r:>12.4}", "IBU/GU"),
        None => println!("{:<8}{:>12}", "IBU/GU", "n/a"),
    }
    println!("{:<8}{:>12.4}", "MCU", props.mcu);
    println!("{:<8}{:>12.4}", "EBC", props.ebc);
    println!(
        "f1 {:.5}  f2 {:.5}  f3 {:.5}  e {:.5}  ({})",
        obj.f1,
        obj.f2,
        obj.f3,
        e,
        if e <= DEFAULT_SUCCESS_THRESHOLD { "successful" } else { "not successful" }
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    ws: &Workspace,
    product: &str,
    algo: &str,
    seed: u64,
    generations: Option<usize>,
    pop: Option<usize>,
    threshold: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let (number, target) = ws.resolve_product(product)?;
    let result: RunResult = if algo == "de" {
        let mut cfg = ws.de_config(seed);
        cfg.success_threshold = threshold;
        if let Some(p) = pop {
            cfg.population_size = p;
        }
        de_best1_run(target, &ws.inventory, &ws.brew, &cfg)?
    } else {
        let mut cfg = ws.nsga2_config(seed);
        if let Some(g) = generations {
            cfg.generations = g;
        }
        if let Some(p) = pop {
            cfg.population_size = p;
        }
        nsga2_run(target, &ws.inventory, &ws.brew, &cfg)?
    };
    let s = summarize_run(&result, threshold);
    let path = out.unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}-{}-seed{seed}.json",
            product_slug(number, &target.name),
            result.algorithm
        ))
    });
    let record = RunRecord {
        product: number,
        run_index: 0,
        target: target.clone(),
        inventory: ws.inventory.clone(),
        brew: ws.brew.clone(),
        result,
    };
    record.write(&path)?;
    println!(
        "{} ({}) seed {seed}: {} non-dominated, {} successful, best e {:.5}, {} evaluations",
        target.name, record.result.algorithm, s.nondominated_count, s.successful_count, s.best_e,
        record.result.evaluations_used
    );
    println!("result written to {}", path.display());
    Ok(())
}

fn batch(ws: &Workspace, plan: &ExperimentPlan) -> Result<(), Failure> {
    let report = run_experiment(plan, ws)?;
    print_groups(&report.analysis.groups);
    println!("results and reports written to {}", plan.out_dir.display());
    let failures: Vec<_> = report.failures().collect();
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!(
            "run failed: product {} {} run {} (seed {}): {}",
            f.product,
            f.algorithm,
            f.run_index,
            f.seed,
            f.result.as_ref().err().map_or("", String::as_str)
        );
    }
    Err(Failure::Runtime(format!("{} of {} runs failed", failures.len(), report.outcomes.len())))
}

fn print_groups(groups: &[GroupAnalysis]) {
    println!(
        "{:>3}  {:<28}{:<10}{:>14}{:>14}{:>8}",
        "#", "product", "algorithm", "non-dominated", "successful", "runs"
    );
    for g in groups {
        let a = &g.aggregate;
        println!(
            "{:>3}  {:<28}{:<10}{:>14}{:>14}{:>8}",
            g.product,
            g.name,
            g.algorithm.tag(),
            format!("{} ± {:.1}", a.nondominated_median, a.nondominated_stdev),
            format!("{} ± {:.1}", a.successful_median, a.successful_stdev),
            format!("{}/{}", a.runs_with_success, a.runs),
        );
    }
}

fn serve(
    config: revbrew_service::ServiceConfig,
    addr: SocketAddr,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let mut builder = tokio::runtime::Builder::new_multi_thread();
    builder.enable_all();
    if let Some(t) = threads.or_else(par::threads_from_env).filter(|&t| t > 0) {
        builder.worker_threads(t);
    }
    let runtime = builder
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Runtime(format!("{addr}: {e}")))?;
        let bound = listener.local_addr().unwrap_or(addr);
        eprintln!("serving on http://{bound}");
        revbrew_service::serve_on(listener, config)
            .await
            .map_err(|e| Failure::Runtime(format!("{bound}: {e}")))
    })
}
