//! File formats and experiment orchestration.
//!
//! A workspace directory holds three TOML files:
//!
//! - `inventory.toml`: `[[hop]]`, `[[fermentable]]` and `[[yeast]]` tables.
//! - `targets.toml`: `[[target]]` tables, product 1 first.
//! - `workbench.toml`: `[brew]`, `[nsga2]` and `[de]` settings.
//!
//! Each optimisation run is persisted as one JSON result file that embeds the
//! target, inventory, brew settings and engine configuration (seed included),
//! which is everything needed to replay it. Reports are CSV.

mod experiment;
mod reports;

pub use experiment::{
    analyze_results, load_run_records, run_experiment, AlgorithmChoice, AnalysisOutput,
    ExperimentPlan, ExperimentReport, GroupAnalysis, ProductSelection, RunOutcome,
};
pub use reports::{
    write_distance_matrix_csv, write_heatmap_csv, write_counts_csv, write_deviation_csv,
    write_failures_csv, write_uptake_deviation_csv, TableRow,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evo::{DeConfig, EvoError, NsgaConfig, RunResult};
use crate::model::{BrewConfig, Inventory, ModelError, RecipeVector, TargetProfile};

pub const INVENTORY_FILE: &str = "inventory.toml";
pub const TARGETS_FILE: &str = "targets.toml";
pub const WORKBENCH_FILE: &str = "workbench.toml";

const BUILTIN_INVENTORY: &str = include_str!("../../data/default/inventory.toml");
const BUILTIN_TARGETS: &str = include_str!("../../data/default/targets.toml");
const BUILTIN_WORKBENCH: &str = include_str!("../../data/default/workbench.toml");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("{file}: {source}")]
    Invalid {
        file: String,
        #[source]
        source: ModelError,
    },
    #[error("{0}")]
    Config(#[from] EvoError),
    #[error("unknown product {0:?}")]
    UnknownProduct(String),
    #[error("product name {0:?} is ambiguous; select it by number")]
    AmbiguousProduct(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// True for bad input data, as opposed to a failing environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, IoError::Io { .. } | IoError::Csv(_))
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

/// Writes via a temporary sibling and a rename, so readers never see a
/// partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| IoError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| IoError::io(path, e))
}

fn parse_toml<T: serde::de::DeserializeOwned>(file: &str, text: &str) -> Result<T, IoError> {
    toml::from_str(text).map_err(|e| IoError::Parse {
        file: file.to_string(),
        message: e.to_string(),
    })
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string_pretty(value).expect("workspace types always serialise to TOML")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsFile {
    #[serde(default, rename = "target")]
    targets: Vec<TargetProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkbenchFile {
    brew: BrewConfig,
    nsga2: NsgaConfig,
    de: DeConfig,
}

/// Inventory, product targets, brewhouse and engine settings.
///
/// The seeds stored in `nsga2` / `de` are placeholders; every run supplies
/// its own.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub inventory: Inventory,
    pub targets: Vec<TargetProfile>,
    pub brew: BrewConfig,
    pub nsga2: NsgaConfig,
    pub de: DeConfig,
}

/// The three workspace files as text.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceFiles {
    pub inventory: String,
    pub targets: String,
    pub workbench: String,
}

impl Workspace {
    /// The shipped stock and product catalogue.
    pub fn builtin() -> Self {
        Self::from_files(&WorkspaceFiles {
            inventory: BUILTIN_INVENTORY.into(),
            targets: BUILTIN_TARGETS.into(),
            workbench: BUILTIN_WORKBENCH.into(),
        })
        .expect("shipped workspace is valid")
    }

    pub fn load(dir: &Path) -> Result<Self, IoError> {
        Self::from_files(&WorkspaceFiles {
            inventory: read_file(&dir.join(INVENTORY_FILE))?,
            targets: read_file(&dir.join(TARGETS_FILE))?,
            workbench: read_file(&dir.join(WORKBENCH_FILE))?,
        })
    }

    pub fn from_files(files: &WorkspaceFiles) -> Result<Self, IoError> {
        let inventory = parse_inventory(&files.inventory)?;
        let targets: TargetsFile = parse_toml(TARGETS_FILE, &files.targets)?;
        let bench: WorkbenchFile = parse_toml(WORKBENCH_FILE, &files.workbench)?;
        let ws = Self {
            inventory,
            targets: targets.targets,
            brew: bench.brew,
            nsga2: bench.nsga2,
            de: bench.de,
        };
        ws.validate()?;
        Ok(ws)
    }

    pub fn to_files(&self) -> WorkspaceFiles {
        WorkspaceFiles {
            inventory: inventory_to_toml(&self.inventory),
            targets: to_toml(&TargetsFile {
                targets: self.targets.clone(),
            }),
            workbench: to_toml(&WorkbenchFile {
                brew: self.brew.clone(),
                nsga2: self.nsga2.clone(),
                de: self.de.clone(),
            }),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), IoError> {
        let files = self.to_files();
        write_atomic(&dir.join(INVENTORY_FILE), files.inventory.as_bytes())?;
        write_atomic(&dir.join(TARGETS_FILE), files.targets.as_bytes())?;
        write_atomic(&dir.join(WORKBENCH_FILE), files.workbench.as_bytes())
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let invalid = |file: &str| {
            let file = file.to_string();
            move |source| IoError::Invalid { file, source }
        };
        self.inventory.validate().map_err(invalid(INVENTORY_FILE))?;
        if self.targets.is_empty() {
            return Err(IoError::Invalid {
                file: TARGETS_FILE.into(),
                source: crate::model::invalid("target", "at least one target is required"),
            });
        }
        for t in &self.targets {
            t.validate().map_err(invalid(TARGETS_FILE))?;
        }
        self.brew.validate().map_err(invalid(WORKBENCH_FILE))?;
        self.nsga2.validate()?;
        self.de.validate()?;
        Ok(())
    }

    /// Resolves a 1-based product number or an exact product name.
    pub fn resolve_product(&self, selector: &str) -> Result<(usize, &TargetProfile), IoError> {
        let selector = selector.trim();
        if let Ok(n) = selector.parse::<usize>() {
            return match n.checked_sub(1).and_then(|i| self.targets.get(i)) {
                Some(t) => Ok((n, t)),
                None => Err(IoError::UnknownProduct(selector.to_string())),
            };
        }
        let mut hits = self
            .targets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.name == selector);
        match (hits.next(), hits.next()) {
            (Some((i, t)), None) => Ok((i + 1, t)),
            (Some(_), Some(_)) => Err(IoError::AmbiguousProduct(selector.to_string())),
            _ => Err(IoError::UnknownProduct(selector.to_string())),
        }
    }

    pub fn nsga2_config(&self, seed: u64) -> NsgaConfig {
        NsgaConfig {
            seed,
            ..self.nsga2.clone()
        }
    }

    pub fn de_config(&self, seed: u64) -> DeConfig {
        DeConfig {
            seed,
            ..self.de.clone()
        }
    }
}

pub fn parse_inventory(text: &str) -> Result<Inventory, IoError> {
    let inv: Inventory = parse_toml(INVENTORY_FILE, text)?;
    inv.validate().map_err(|source| IoError::Invalid {
        file: INVENTORY_FILE.into(),
        source,
    })?;
    Ok(inv)
}

pub fn inventory_to_toml(inventory: &Inventory) -> String {
    to_toml(inventory)
}

/// A recipe as written by hand: a target name plus uptakes keyed by
/// ingredient name. Ingredients left out are taken as zero.
///
/// ```toml
/// target = "Guinness Extra Stout"
///
/// [uptake]
/// "Pale Malt (UK)" = 4.2
/// "Roasted Barley" = 0.35
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeFile {
    pub target: String,
    #[serde(default)]
    pub uptake: BTreeMap<String, f64>,
}

impl RecipeFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        parse_toml("recipe", text)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = read_file(path)?;
        toml::from_str(&text).map_err(|e| IoError::Parse {
            file: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Lays the uptakes out in genome order and checks them against the stock.
    pub fn to_vector(&self, inventory: &Inventory) -> Result<RecipeVector, IoError> {
        let mut values = vec![0.0; inventory.dimension()];
        for (name, &amount) in &self.uptake {
            let index = inventory.index_of(name).ok_or_else(|| IoError::Invalid {
                file: "recipe".into(),
                source: crate::model::invalid(
                    format!("uptake.{name:?}"),
                    "no such ingredient in the inventory",
                ),
            })?;
            values[index] = amount;
        }
        let recipe = RecipeVector(values);
        recipe.check(inventory).map_err(|source| IoError::Invalid {
            file: "recipe".into(),
            source,
        })?;
        Ok(recipe)
    }
}

/// One persisted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 1-based product number within the workspace catalogue.
    pub product: usize,
    pub run_index: usize,
    pub target: TargetProfile,
    pub inventory: Inventory,
    pub brew: BrewConfig,
    pub result: RunResult,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run records serialise");
        s.push('\n');
        s
    }

    pub fn from_json(file: &str, text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse {
            file: file.to_string(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Self::from_json(&path.display().to_string(), &read_file(path)?)
    }

    /// Re-executes the run from the embedded settings.
    pub fn replay(&self) -> Result<RunResult, EvoError> {
        use crate::evo::{de_best1_run, nsga2_run, EngineConfig};
        match &self.result.config {
            EngineConfig::Nsga2(c) => nsga2_run(&self.target, &self.inventory, &self.brew, c),
            EngineConfig::DeBest1(c) => de_best1_run(&self.target, &self.inventory, &self.brew, c),
        }
    }
}

/// `p07-sunmaid-stout`: stable directory names for products.
pub fn product_slug(product: usize, name: &str) -> String {
    let mut slug = format!("p{product:02}-");
    let mut dash = false;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
            dash = false;
        } else if !dash {
            slug.push('-');
            dash = true;
        }
    }
    slug.trim_end_matches('-').to_string()
}
