//! λ-sweep analysis over truncated-Gaussian traces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::stats::{mean, sensitivity_sweep, SensitivityReport, SweepRun};

#[derive(Debug, Clone, Default)]
pub struct SweepFilter {
    /// Only these objectives; all when empty.
    pub objectives: Vec<String>,
    /// Only these λ values; all when empty.
    pub lambdas: Vec<f64>,
}

impl SweepFilter {
    fn keep(&self, t: &Trace) -> Option<f64> {
        let lambda = t.meta.strategy.lambda()?;
        let obj_ok = self.objectives.is_empty() || self.objectives.iter().any(|o| *o == t.meta.objective);
        let lambda_ok = self.lambdas.is_empty()
            || self
                .lambdas
                .iter()
                .any(|&l| (l - lambda).abs() <= 1e-9 * l.abs().max(1.0));
        (obj_ok && lambda_ok).then_some(lambda)
    }
}

pub fn sweep_runs(traces: &[Trace], filter: &SweepFilter) -> Vec<SweepRun> {
    traces
        .iter()
        .filter_map(|t| {
            filter.keep(t).map(|lambda| SweepRun {
                objective: t.meta.objective.clone(),
                lambda,
                values: t.values(),
            })
        })
        .collect()
}

pub fn analyze(traces: &[Trace], filter: &SweepFilter, split: f64) -> Result<SensitivityReport> {
    let runs = sweep_runs(traces, filter);
    if runs.is_empty() {
        return Err(Error::InvalidArgument(
            "no truncated-Gaussian traces match the sensitivity filter".into(),
        ));
    }
    sensitivity_sweep(&runs, split)
}

/// Mean normalized running best per λ and iteration; each objective's
/// running-best values are min–max scaled over all of its runs first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCurvePoint {
    pub lambda: f64,
    pub iteration: usize,
    pub runs: usize,
    pub mean: f64,
}

pub fn normalized_curves(runs: &[SweepRun]) -> Vec<NormalizedCurvePoint> {
    let mut ranges: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let bests: Vec<Vec<f64>> = runs.iter().map(|r| crate::engine::running_best(&r.values)).collect();
    for (r, b) in runs.iter().zip(&bests) {
        let e = ranges
            .entry(&r.objective)
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        for &v in b {
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
    }
    let mut by_lambda: BTreeMap<u64, (f64, Vec<Vec<f64>>)> = BTreeMap::new();
    for (r, b) in runs.iter().zip(&bests) {
        let (lo, hi) = ranges[r.objective.as_str()];
        let scaled = b
            .iter()
            .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect();
        by_lambda
            .entry(r.lambda.to_bits())
            .or_insert_with(|| (r.lambda, Vec::new()))
            .1
            .push(scaled);
    }
    let mut groups: Vec<_> = by_lambda.into_values().collect();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    for (lambda, curves) in groups {
        let len = curves.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..len {
            let vals: Vec<f64> = curves.iter().filter_map(|c| c.get(i).copied()).collect();
            out.push(NormalizedCurvePoint {
                lambda,
                iteration: i + 1,
                runs: vals.len(),
                mean: mean(&vals),
            });
        }
    }
    out
}
