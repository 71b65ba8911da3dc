//! Line-delimited JSON trace files, one record per evaluation.
//!
//! ```text
//! {"run_id":"bowl__uniform-n3-T30__r000","objective":"bowl","arm":"uniform-n3-T30",
//!  "strategy":"uniform","n0":3,"lambda":null,"budget":30,"repetition":0,
//!  "seed":1234,"iteration":1,"config":{"x1":0.41,"x2":0.07},"y":0.83,"running_best":0.83}
//! ```
//!
//! (shown wrapped; each record is a single line). Iterations are 1-based and
//! a file holds exactly `budget` records.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::engine::{Trace, TraceMeta};
use crate::error::{Error, Result};
use crate::init::InitStrategy;
use crate::space::Configuration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run_id: String,
    pub objective: String,
    pub arm: String,
    pub strategy: String,
    pub n0: usize,
    pub lambda: Option<f64>,
    pub budget: usize,
    pub repetition: usize,
    pub seed: u64,
    pub iteration: usize,
    pub config: Map<String, Value>,
    pub y: f64,
    pub running_best: f64,
}

fn strategy_from_parts(tag: &str, n0: usize, lambda: Option<f64>) -> Option<InitStrategy> {
    match (tag, lambda) {
        ("uniform", _) => Some(InitStrategy::Uniform { count: n0 }),
        ("truncated-gaussian", Some(lambda)) => {
            Some(InitStrategy::TruncatedGaussian { count: n0, lambda })
        }
        ("default", _) => Some(InitStrategy::DefaultPoint),
        _ => None,
    }
}

pub fn records(trace: &Trace) -> Vec<TraceRecord> {
    let m = &trace.meta;
    trace
        .evaluations()
        .iter()
        .zip(trace.running_best())
        .enumerate()
        .map(|(i, (e, &rb))| TraceRecord {
            run_id: m.run_id.clone(),
            objective: m.objective.clone(),
            arm: m.arm.clone(),
            strategy: m.strategy.tag().to_string(),
            n0: m.strategy.count(),
            lambda: m.strategy.lambda(),
            budget: m.budget,
            repetition: m.repetition,
            seed: m.seed,
            iteration: i + 1,
            config: trace
                .parameter_names
                .iter()
                .cloned()
                .zip(e.configuration.values().iter().map(|&v| Value::from(v)))
                .collect(),
            y: e.value,
            running_best: rb,
        })
        .collect()
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(ctx(), e))?);
    for r in records(trace) {
        let line = serde_json::to_string(&r).map_err(|e| Error::Trace {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(|e| Error::io(ctx(), e))?;
    }
    w.flush().map_err(|e| Error::io(ctx(), e))
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let bad = |reason: String| Error::Trace {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut trace: Option<Trace> = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TraceRecord =
            serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?;
        let t = match &mut trace {
            Some(t) => t,
            None => {
                let strategy = strategy_from_parts(&r.strategy, r.n0, r.lambda)
                    .ok_or_else(|| bad(format!("unknown strategy `{}`", r.strategy)))?;
                let meta = TraceMeta {
                    run_id: r.run_id.clone(),
                    objective: r.objective.clone(),
                    arm: r.arm.clone(),
                    strategy,
                    budget: r.budget,
                    repetition: r.repetition,
                    seed: r.seed,
                };
                trace.insert(Trace::new(meta, r.config.keys().cloned().collect()))
            }
        };
        if r.run_id != t.meta.run_id {
            return Err(bad(format!("mixed run ids `{}` and `{}`", t.meta.run_id, r.run_id)));
        }
        if r.iteration != t.len() + 1 {
            return Err(bad(format!(
                "expected iteration {}, found {}",
                t.len() + 1,
                r.iteration
            )));
        }
        let values = t
            .parameter_names
            .iter()
            .map(|n| r.config.get(n).and_then(Value::as_f64))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(format!("iteration {}: configuration keys differ", r.iteration)))?;
        t.push(Configuration(values), r.y);
        if t.running_best().last() != Some(&r.running_best) {
            return Err(bad(format!(
                "iteration {}: running_best {} disagrees with the recorded values",
                r.iteration, r.running_best
            )));
        }
    }
    let trace = trace.ok_or_else(|| bad("empty trace".into()))?;
    if trace.len() != trace.meta.budget {
        return Err(bad(format!(
            "{} evaluations for budget {}",
            trace.len(),
            trace.meta.budget
        )));
    }
    Ok(trace)
}

/// The directory holding trace files: `dir/traces` when present, else `dir`.
pub fn trace_dir(dir: &Path) -> PathBuf {
    let nested = dir.join("traces");
    if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

/// Reads every `*.jsonl` trace under [`trace_dir`], sorted by run id.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<Trace>> {
    let dir = trace_dir(dir);
    let entries =
        fs::read_dir(&dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry
            .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
            .path();
        if p.extension().is_some_and(|x| x == "jsonl") {
            paths.push(p);
        }
    }
    paths.sort();
    let mut traces = paths
        .iter()
        .map(|p| read_trace(p))
        .collect::<Result<Vec<_>>>()?;
    traces.sort_by(|a, b| a.meta.run_id.cmp(&b.meta.run_id));
    Ok(traces)
}
