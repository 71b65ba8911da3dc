//! Paired comparisons of initialization strategies against the uniform
//! baseline, summarized by exact binomial tests.
//!
//! Cells are formed per objective:
//!
//! * **S vs R**: all truncated-Gaussian runs with `n₀` initial points and
//!   budget `T` (pooled over λ and repetitions) against the uniform arm with
//!   the same `n₀` and `T`.
//! * **D vs R**: the default-point arm with budget `T` against each uniform
//!   arm with budget `T`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{TauMetric, TauRule, Thresholds};
use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::init::InitStrategy;
use crate::stats::{
    binomial_from_tally, classify, delta_conv, delta_metric, mean, spread, BinomialResult, Outcome,
    Tally,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pairing {
    #[serde(rename = "S vs. R")]
    SampleVsRandom,
    #[serde(rename = "D vs. R")]
    DefaultVsRandom,
}

impl Pairing {
    pub fn label(self) -> &'static str {
        match self {
            Pairing::SampleVsRandom => "S vs. R",
            Pairing::DefaultVsRandom => "D vs. R",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Convergence,
    Metric,
}

impl Criterion {
    pub fn label(self) -> &'static str {
        match self {
            Criterion::Convergence => "Convergence",
            Criterion::Metric => "Metric",
        }
    }

    fn hypothesis(self) -> &'static str {
        match self {
            Criterion::Convergence => "H0(conv)",
            Criterion::Metric => "H0(metric)",
        }
    }
}

/// Repetition means of one challenger/baseline pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedCell {
    pub pairing: Pairing,
    pub objective: String,
    pub n0: usize,
    pub budget: usize,
    pub challenger_runs: usize,
    pub baseline_runs: usize,
    pub challenger_conv: f64,
    pub baseline_conv: f64,
    pub challenger_metric: f64,
    pub baseline_metric: f64,
    pub delta_conv: f64,
    pub delta_metric: f64,
    pub conv: Outcome,
    pub metric: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub pairing: Pairing,
    pub criterion: Criterion,
    pub test: BinomialResult,
}

impl ComparisonRow {
    pub fn label(&self) -> String {
        format!("{} {}", self.pairing.label(), self.criterion.label())
    }

    pub fn decision_text(&self) -> String {
        format!("{} {}", self.test.decision.label(), self.criterion.hypothesis())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tau_conv: f64,
    pub tau_metric: f64,
    pub rows: Vec<ComparisonRow>,
    pub cells: Vec<PairedCell>,
    /// Spread of running-best traces per objective; `None` when some trace
    /// has a non-positive value.
    pub spread: BTreeMap<String, Option<f64>>,
    pub warnings: Vec<String>,
}

fn means(traces: &[&Trace]) -> (f64, f64) {
    let conv: Vec<f64> = traces.iter().map(|t| t.convergence_index() as f64).collect();
    let best: Vec<f64> = traces.iter().map(|t| t.best_metric()).collect();
    (mean(&conv), mean(&best))
}

fn pair(
    pairing: Pairing,
    objective: &str,
    n0: usize,
    budget: usize,
    challenger: &[&Trace],
    baseline: &[&Trace],
    tau_conv: f64,
    tau_metric: f64,
) -> Result<PairedCell> {
    let (cc, cm) = means(challenger);
    let (bc, bm) = means(baseline);
    let dc = delta_conv(bc, cc)?;
    let dm = delta_metric(bm, cm)?;
    Ok(PairedCell {
        pairing,
        objective: objective.to_owned(),
        n0,
        budget,
        challenger_runs: challenger.len(),
        baseline_runs: baseline.len(),
        challenger_conv: cc,
        baseline_conv: bc,
        challenger_metric: cm,
        baseline_metric: bm,
        delta_conv: dc,
        delta_metric: dm,
        conv: classify(dc, tau_conv),
        metric: classify(dm, tau_metric),
    })
}

/// Per-objective spread of the running-best traces.
pub fn objective_spreads(traces: &[Trace]) -> BTreeMap<String, Option<f64>> {
    let mut by_obj: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
    for t in traces {
        by_obj.entry(&t.meta.objective).or_default().push(t.running_best());
    }
    by_obj
        .into_iter()
        .map(|(k, v)| (k.to_owned(), spread(&v).ok()))
        .collect()
}

pub fn compare(traces: &[Trace], thresholds: &Thresholds) -> Result<CompareReport> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("no traces to compare".into()));
    }
    let spreads = objective_spreads(traces);
    let tau_metric = match thresholds.tau_metric {
        TauMetric::Value(v) => v,
        TauMetric::Rule(TauRule::MinSpread) => spreads
            .values()
            .flatten()
            .copied()
            .min_by(f64::total_cmp)
            .ok_or_else(|| {
                Error::InvalidArgument(
                    "min-spread threshold needs positive running-best values".into(),
                )
            })?,
    };
    let tau_conv = thresholds.tau_conv;

    // objective → (strategy kind, n0, budget) → traces
    #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
    enum Kind {
        Uniform,
        Sample,
        Default,
    }
    let mut groups: BTreeMap<&str, BTreeMap<(Kind, usize, usize), Vec<&Trace>>> = BTreeMap::new();
    for t in traces {
        let kind = match t.meta.strategy {
            InitStrategy::Uniform { .. } => Kind::Uniform,
            InitStrategy::TruncatedGaussian { .. } => Kind::Sample,
            InitStrategy::DefaultPoint => Kind::Default,
        };
        groups
            .entry(&t.meta.objective)
            .or_default()
            .entry((kind, t.meta.strategy.count(), t.meta.budget))
            .or_default()
            .push(t);
    }

    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (obj, g) in &groups {
        for (&(kind, n0, budget), challengers) in g {
            match kind {
                Kind::Uniform => {}
                Kind::Sample => match g.get(&(Kind::Uniform, n0, budget)) {
                    Some(base) => cells.push(pair(
                        Pairing::SampleVsRandom,
                        obj,
                        n0,
                        budget,
                        challengers,
                        base,
                        tau_conv,
                        tau_metric,
                    )?),
                    None => warnings.push(format!(
                        "S vs. R: objective `{obj}` has sample runs with n0={n0}, T={budget} but no uniform baseline; cell skipped"
                    )),
                },
                Kind::Default => {
                    let bases: Vec<_> = g
                        .iter()
                        .filter(|(k, _)| k.0 == Kind::Uniform && k.2 == budget)
                        .collect();
                    if bases.is_empty() {
                        warnings.push(format!(
                            "D vs. R: objective `{obj}` has default runs with T={budget} but no uniform baseline; cell skipped"
                        ));
                    }
                    for (&(_, base_n0, _), base) in bases {
                        cells.push(pair(
                            Pairing::DefaultVsRandom,
                            obj,
                            base_n0,
                            budget,
                            challengers,
                            base,
                            tau_conv,
                            tau_metric,
                        )?);
                    }
                }
            }
        }
    }

    let mut rows = Vec::new();
    for pairing in [Pairing::SampleVsRandom, Pairing::DefaultVsRandom] {
        let these: Vec<&PairedCell> = cells.iter().filter(|c| c.pairing == pairing).collect();
        if these.is_empty() {
            warnings.push(format!("{}: no paired cells; comparison skipped", pairing.label()));
            continue;
        }
        for criterion in [Criterion::Convergence, Criterion::Metric] {
            let tally: Tally = these
                .iter()
                .map(|c| match criterion {
                    Criterion::Convergence => c.conv,
                    Criterion::Metric => c.metric,
                })
                .collect();
            if tally.wins + tally.losses == 0 {
                warnings.push(format!(
                    "{} {}: all {} cells tied; no test possible",
                    pairing.label(),
                    criterion.label(),
                    tally.ties
                ));
                continue;
            }
            rows.push(ComparisonRow {
                pairing,
                criterion,
                test: binomial_from_tally(&tally)?,
            });
        }
    }

    Ok(CompareReport {
        tau_conv,
        tau_metric,
        rows,
        cells,
        spread: spreads,
        warnings,
    })
}

/// Mean, standard deviation and range of the running best at every
/// iteration, per (objective, arm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub objective: String,
    pub arm: String,
    pub iteration: usize,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn aggregate_curves(traces: &[Trace]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Trace>> = BTreeMap::new();
    for t in traces {
        groups
            .entry((&t.meta.objective, &t.meta.arm))
            .or_default()
            .push(t);
    }
    let mut out = Vec::new();
    for ((obj, arm), ts) in groups {
        let len = ts.iter().map(|t| t.len()).max().unwrap_or(0);
        for i in 0..len {
            let vals: Vec<f64> = ts
                .iter()
                .filter_map(|t| t.running_best().get(i).copied())
                .collect();
            let m = mean(&vals);
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            out.push(CurvePoint {
                objective: obj.to_owned(),
                arm: arm.to_owned(),
                iteration: i + 1,
                runs: vals.len(),
                mean: m,
                std,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    out
}
