//! Executes every (objective × arm × repetition) cell of an experiment.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Arm, ExperimentConfig, ObjectiveSource, ResolvedObjective, Thresholds};
use crate::engine::{derive_seed, run_bo, BoOptions, RunSummary};
use crate::error::{Error, Result};
use crate::objectives::{cv_wrap, Evaluator, ExternalEvaluator, Synthetic};
use crate::trace::write_trace;

pub const TRACE_SUBDIR: &str = "traces";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
    /// Replaces the configuration's base seed.
    pub seed: Option<u64>,
    /// Replaces the configuration's output directory.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub run_id: String,
    pub objective: String,
    pub arm: String,
    pub repetition: usize,
    pub seed: u64,
    pub trace: String,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_metric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub base_seed: u64,
    pub repetitions: usize,
    /// Thresholds from the configuration, used by `compare` unless overridden.
    #[serde(default)]
    pub thresholds: Thresholds,
    pub cells: Vec<CellRecord>,
}

impl Manifest {
    pub fn failures(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.status == CellStatus::Failed)
            .count()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST);
        let text =
            fs::read_to_string(&p).map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
    }
}

struct Cell<'a> {
    objective: &'a ResolvedObjective,
    arm: &'a Arm,
    repetition: usize,
    run_id: String,
    seed: u64,
}

pub fn run_id(objective: &str, arm: &str, repetition: usize) -> String {
    format!("{objective}__{arm}__r{repetition:03}")
}

/// Fold seed shared by every run on one objective, so all arms see the same
/// noisy objective.
fn fold_seed(base_seed: u64, objective: &str) -> u64 {
    derive_seed(base_seed, objective, "cv-folds", 0)
}

fn build_evaluator(
    o: &ResolvedObjective,
    base_seed: u64,
    run_id: &str,
) -> Result<Box<dyn Evaluator + Send>> {
    let base: Box<dyn Evaluator + Send> = match &o.source {
        ObjectiveSource::Synthetic(spec) => Box::new(Synthetic::new(spec.clone(), o.space.clone())?),
        ObjectiveSource::External(spec) => Box::new(ExternalEvaluator::spawn(
            spec.clone(),
            o.space.names().map(str::to_owned).collect(),
            run_id,
        )?),
    };
    if o.cv_folds == 1 && o.cv_noise == 0.0 {
        return Ok(base);
    }
    Ok(Box::new(cv_wrap(base, o.cv_folds, o.cv_noise, fold_seed(base_seed, &o.id))?))
}

fn run_cell(cell: &Cell<'_>, base_seed: u64, options: &BoOptions, trace_dir: &Path) -> Result<RunSummary> {
    let mut evaluator = build_evaluator(cell.objective, base_seed, &cell.run_id)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cell.seed);
    let mut trace = run_bo(
        evaluator.as_mut(),
        &cell.objective.space,
        &cell.arm.strategy,
        cell.arm.budget,
        &mut rng,
        options,
    )?;
    trace.meta.run_id = cell.run_id.clone();
    trace.meta.objective = cell.objective.id.clone();
    trace.meta.arm = cell.arm.name.clone();
    trace.meta.repetition = cell.repetition;
    trace.meta.seed = cell.seed;
    write_trace(&trace_dir.join(format!("{}.jsonl", cell.run_id)), &trace)?;
    Ok(trace.summary())
}

/// Removes trace files left by an earlier run in `dir`.
fn clear_traces(dir: &Path) -> Result<()> {
    let ctx = || format!("cleaning {}", dir.display());
    for entry in fs::read_dir(dir).map_err(|e| Error::io(ctx(), e))? {
        let p = entry.map_err(|e| Error::io(ctx(), e))?.path();
        if p.extension().is_some_and(|x| x == "jsonl") {
            fs::remove_file(&p).map_err(|e| Error::io(ctx(), e))?;
        }
    }
    Ok(())
}

/// Runs every cell and writes one trace per run plus a manifest. Failed
/// cells are recorded in the manifest; the other runs still complete.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<(PathBuf, Manifest)> {
    let (objectives, arms) = config.resolve()?;
    let base_seed = opts.seed.unwrap_or(config.base_seed);
    let out = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| config.output_path());
    let trace_dir = out.join(TRACE_SUBDIR);
    fs::create_dir_all(&trace_dir)
        .map_err(|e| Error::io(format!("creating {}", trace_dir.display()), e))?;
    clear_traces(&trace_dir)?;

    let mut cells = Vec::new();
    for o in &objectives {
        for a in arms.iter().filter(|a| a.applies_to(&o.id)) {
            for repetition in 0..config.repetitions {
                cells.push(Cell {
                    objective: o,
                    arm: a,
                    repetition,
                    run_id: run_id(&o.id, &a.name, repetition),
                    seed: derive_seed(base_seed, &o.id, &a.name, repetition),
                });
            }
        }
    }

    let bo = BoOptions {
        acquisition_budget: config.acquisition_budget,
        ..BoOptions::default()
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunSummary>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(c, base_seed, &bo, &trace_dir))
            .collect()
    });

    let records = cells
        .iter()
        .zip(results)
        .map(|(c, r)| {
            let (status, best_metric, convergence_index, error) = match r {
                Ok(s) => (CellStatus::Completed, Some(s.best_metric), Some(s.convergence_index), None),
                Err(e) => (CellStatus::Failed, None, None, Some(e.to_string())),
            };
            CellRecord {
                run_id: c.run_id.clone(),
                objective: c.objective.id.clone(),
                arm: c.arm.name.clone(),
                repetition: c.repetition,
                seed: c.seed,
                trace: format!("{TRACE_SUBDIR}/{}.jsonl", c.run_id),
                status,
                best_metric,
                convergence_index,
                error,
            }
        })
        .collect();
    let manifest = Manifest {
        name: config.name.clone(),
        base_seed,
        repetitions: config.repetitions,
        thresholds: config.thresholds,
        cells: records,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let p = out.join(MANIFEST);
    fs::write(&p, text + "\n").map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
    Ok((out, manifest))
}
