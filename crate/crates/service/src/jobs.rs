//! Job registry and the single worker that drains the queue.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use revbrew::analysis::{summarize_run, Solution};
use revbrew::evo::{
    run_de, run_nsga2, BrewProblem, DeConfig, EngineConfig, GenerationStats, NsgaConfig, RunResult,
};
use revbrew::io::RunRecord;
use revbrew::model::{BrewConfig, Inventory, TargetProfile};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, watch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

/// Everything needed to execute a job, resolved at submission time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSpec {
    /// 1-based catalogue number when the target came from the workspace.
    pub product: Option<usize>,
    pub target: TargetProfile,
    pub inventory: Inventory,
    pub brew: BrewConfig,
    pub engine: EngineConfig,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Progress {
    pub generation: usize,
    pub best_e: f64,
    pub front0_size: usize,
    pub evaluations: u64,
}

impl From<&GenerationStats> for Progress {
    fn from(s: &GenerationStats) -> Self {
        Self {
            generation: s.generation,
            best_e: s.best_e,
            front0_size: s.front0_size,
            evaluations: s.evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobSummary {
    pub population_size: usize,
    pub nondominated_count: usize,
    pub successful_count: usize,
    pub best_e: f64,
    pub evaluations_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum JobEvent {
    Progress(Progress),
    Done { summary: JobSummary },
    Failed { error: String },
}

impl JobEvent {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, JobEvent::Progress(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            JobEvent::Progress(_) => "progress",
            JobEvent::Done { .. } => "done",
            JobEvent::Failed { .. } => "failed",
        }
    }
}

/// What a status read returns: a consistent copy of the job.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobSnapshot {
    pub id: String,
    pub state: JobState,
    pub spec: ResolvedSpec,
    pub progress: Option<Progress>,
    pub summary: Option<JobSummary>,
    pub error: Option<String>,
    pub result_file: Option<PathBuf>,
}

#[derive(Debug, Default)]
struct Record {
    events: Vec<JobEvent>,
    result: Option<Arc<RunResult>>,
}

pub struct Job {
    snapshot: RwLock<JobSnapshot>,
    record: Mutex<Record>,
    /// Bumped after every appended event.
    version: watch::Sender<u64>,
}

impl Job {
    fn new(id: String, spec: ResolvedSpec) -> Self {
        Self {
            snapshot: RwLock::new(JobSnapshot {
                id,
                state: JobState::Queued,
                spec,
                progress: None,
                summary: None,
                error: None,
                result_file: None,
            }),
            record: Mutex::new(Record::default()),
            version: watch::channel(0).0,
        }
    }

    pub fn snapshot(&self) -> JobSnapshot {
        self.snapshot.read().expect("job lock").clone()
    }

    pub fn result(&self) -> Option<Arc<RunResult>> {
        self.record.lock().expect("job lock").result.clone()
    }

    pub fn event(&self, index: usize) -> Option<JobEvent> {
        self.record.lock().expect("job lock").events.get(index).cloned()
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.version.subscribe()
    }

    fn push_event(&self, event: JobEvent) {
        self.record.lock().expect("job lock").events.push(event);
        self.version.send_modify(|v| *v += 1);
    }

    fn update(&self, f: impl FnOnce(&mut JobSnapshot)) {
        f(&mut self.snapshot.write().expect("job lock"));
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SubmitError {
    #[error("job queue is full ({0} waiting)")]
    QueueFull(usize),
    #[error("job worker has stopped")]
    WorkerGone,
}

pub struct Registry {
    jobs: RwLock<HashMap<String, Arc<Job>>>,
    queue: mpsc::Sender<Arc<Job>>,
    capacity: usize,
}

impl Registry {
    /// Creates the registry and starts its worker on the current runtime.
    pub fn start(capacity: usize, progress_stride: usize, results_dir: PathBuf) -> Arc<Self> {
        let (tx, rx) = mpsc::channel(capacity.max(1));
        let registry = Arc::new(Self {
            jobs: RwLock::new(HashMap::new()),
            queue: tx,
            capacity: capacity.max(1),
        });
        tokio::spawn(worker(rx, progress_stride.max(1), results_dir));
        registry
    }

    pub fn submit(&self, spec: ResolvedSpec) -> Result<JobSnapshot, SubmitError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let job = Arc::new(Job::new(id.clone(), spec));
        let snapshot = job.snapshot();
        // registered first so the worker never runs a job nobody can see
        self.jobs.write().expect("registry lock").insert(id.clone(), job.clone());
        match self.queue.try_send(job) {
            Ok(()) => Ok(snapshot),
            Err(e) => {
                self.jobs.write().expect("registry lock").remove(&id);
                Err(match e {
                    mpsc::error::TrySendError::Full(_) => SubmitError::QueueFull(self.capacity),
                    mpsc::error::TrySendError::Closed(_) => SubmitError::WorkerGone,
                })
            }
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().expect("registry lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<JobSnapshot> {
        let mut all: Vec<JobSnapshot> = self
            .jobs
            .read()
            .expect("registry lock")
            .values()
            .map(|j| j.snapshot())
            .collect();
        all.sort_by(|a, b| a.id.cmp(&b.id));
        all
    }
}

async fn worker(mut rx: mpsc::Receiver<Arc<Job>>, stride: usize, results_dir: PathBuf) {
    while let Some(job) = rx.recv().await {
        let dir = results_dir.clone();
        let j = job.clone();
        let outcome = tokio::task::spawn_blocking(move || execute(&j, stride, &dir)).await;
        if let Err(panic) = outcome {
            fail(&job, format!("job panicked: {panic}"));
        }
    }
}

fn fail(job: &Job, error: String) {
    job.update(|s| {
        s.state = JobState::Failed;
        s.error = Some(error.clone());
    });
    job.push_event(JobEvent::Failed { error });
}

/// Runs one job to completion on the calling (blocking) thread.
fn execute(job: &Job, stride: usize, results_dir: &std::path::Path) {
    job.update(|s| s.state = JobState::Running);
    let spec = job.snapshot().spec;
    let problem = match BrewProblem::new(
        spec.inventory.clone(),
        spec.brew.clone(),
        spec.target.clone(),
    ) {
        Ok(p) => p,
        Err(e) => return fail(job, e.to_string()),
    };

    let mut last_reported = 0;
    let mut observer = |s: &GenerationStats| {
        let p = Progress::from(s);
        job.update(|snap| snap.progress = Some(p));
        if s.generation % stride == 0 {
            last_reported = s.generation;
            job.push_event(JobEvent::Progress(p));
        }
    };
    let result = match &spec.engine {
        EngineConfig::Nsga2(cfg) => run_nsga2(&problem, cfg, &mut observer),
        EngineConfig::DeBest1(cfg) => run_de(&problem, cfg, None, &mut observer),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => return fail(job, e.to_string()),
    };
    if let Some(last) = result.trace.last() {
        if last.generation != last_reported {
            job.push_event(JobEvent::Progress(last.into()));
        }
    }

    let id = job.snapshot().id;
    let record = RunRecord {
        product: spec.product.unwrap_or(0),
        run_index: 0,
        target: spec.target.clone(),
        inventory: spec.inventory.clone(),
        brew: spec.brew.clone(),
        result,
    };
    let path = results_dir.join(format!("{id}.json"));
    if let Err(e) = record.write(&path) {
        return fail(job, format!("could not persist result: {e}"));
    }

    let s = summarize_run(&record.result, spec.threshold);
    let summary = JobSummary {
        population_size: s.population_size,
        nondominated_count: s.nondominated_count,
        successful_count: s.successful_count,
        best_e: s.best_e,
        evaluations_used: record.result.evaluations_used,
    };
    job.record.lock().expect("job lock").result = Some(Arc::new(record.result));
    job.update(|snap| {
        snap.state = JobState::Done;
        snap.summary = Some(summary.clone());
        snap.result_file = Some(path);
    });
    job.push_event(JobEvent::Done { summary });
}

/// Solutions of a finished job as served to clients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSet {
    pub threshold: f64,
    pub ingredients: Vec<String>,
    pub successful: Vec<ServedSolution>,
    pub front0: Vec<ServedSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServedSolution {
    #[serde(flatten)]
    pub solution: Solution,
    pub e: f64,
}

pub fn solution_set(spec: &ResolvedSpec, result: &RunResult) -> SolutionSet {
    let serve = |i: &revbrew::evo::Individual| ServedSolution {
        solution: Solution {
            genome: i.genome.clone(),
            objectives: i.objectives,
        },
        e: i.overall_error(),
    };
    let front0: Vec<ServedSolution> = result.front0().map(serve).collect();
    SolutionSet {
        threshold: spec.threshold,
        ingredients: spec.inventory.names().iter().map(|s| s.to_string()).collect(),
        successful: front0.iter().filter(|s| s.e <= spec.threshold).cloned().collect(),
        front0,
    }
}

/// Engine settings for a job, starting from the workspace defaults.
pub fn engine_config(
    algorithm: revbrew::evo::Algorithm,
    nsga2: &NsgaConfig,
    de: &DeConfig,
    seed: u64,
    threshold: f64,
) -> EngineConfig {
    match algorithm {
        revbrew::evo::Algorithm::Nsga2 => EngineConfig::Nsga2(NsgaConfig {
            seed,
            ..nsga2.clone()
        }),
        revbrew::evo::Algorithm::DeBest1 => EngineConfig::DeBest1(DeConfig {
            seed,
            success_threshold: threshold,
            ..de.clone()
        }),
    }
}
