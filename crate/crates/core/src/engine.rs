//! The Bayesian-optimization loop and per-run metrics.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::{self, AcquisitionContext};
use crate::error::{Error, Result};
use crate::init::{generate_initial, InitStrategy};
use crate::objectives::Evaluator;
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::{FitPolicy, GpModel};

/// Relative tolerance when deciding that the running best has reached its final value.
pub const CONVERGENCE_RTOL: f64 = 1e-12;
const CONVERGENCE_ATOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub run_id: String,
    pub objective: String,
    pub arm: String,
    pub strategy: InitStrategy,
    pub budget: usize,
    pub repetition: usize,
    pub seed: u64,
}

impl TraceMeta {
    pub fn new(strategy: InitStrategy, budget: usize) -> Self {
        Self {
            run_id: String::new(),
            objective: String::new(),
            arm: String::new(),
            strategy,
            budget,
            repetition: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub configuration: Configuration,
    pub value: f64,
}

/// All evaluations of one run, in order, with the running best r(t).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub parameter_names: Vec<String>,
    evaluations: Vec<Evaluation>,
    running_best: Vec<f64>,
}

impl Trace {
    pub fn new(meta: TraceMeta, parameter_names: Vec<String>) -> Self {
        Self {
            meta,
            parameter_names,
            evaluations: Vec::new(),
            running_best: Vec::new(),
        }
    }

    pub fn push(&mut self, configuration: Configuration, value: f64) {
        let best = self
            .running_best
            .last()
            .map_or(value, |&b| if value > b { value } else { b });
        self.running_best.push(best);
        self.evaluations.push(Evaluation {
            configuration,
            value,
        });
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.evaluations
    }

    pub fn values(&self) -> Vec<f64> {
        self.evaluations.iter().map(|e| e.value).collect()
    }

    pub fn running_best(&self) -> &[f64] {
        &self.running_best
    }

    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    pub fn convergence_index(&self) -> usize {
        convergence_index(&self.running_best)
    }

    pub fn best_metric(&self) -> f64 {
        best_metric(&self.running_best)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            run_id: self.meta.run_id.clone(),
            convergence_index: self.convergence_index(),
            best_metric: self.best_metric(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_id: String,
    pub convergence_index: usize,
    pub best_metric: f64,
}

/// Running maximum of `values`.
pub fn running_best(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let next = out.last().map_or(v, |&b: &f64| if v > b { v } else { b });
        out.push(next);
    }
    out
}

/// 1-based first iteration at which the running best of `values` reaches its final value.
///
/// Accepts either raw objective values or a running-best series; both give
/// the same answer. Panics on an empty slice.
pub fn convergence_index(values: &[f64]) -> usize {
    let best = best_metric(values);
    let threshold = best - best.abs() * CONVERGENCE_RTOL - CONVERGENCE_ATOL;
    let mut running = f64::NEG_INFINITY;
    for (t, &v) in values.iter().enumerate() {
        running = running.max(v);
        if running >= threshold {
            return t + 1;
        }
    }
    values.len()
}

/// Largest objective value in `values`. Panics on an empty slice.
pub fn best_metric(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "best_metric of an empty trace");
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoOptions {
    pub fit_policy: FitPolicy,
    /// Random EI candidates per iteration; `None` means 1000·d.
    pub acquisition_budget: Option<usize>,
}

impl Default for BoOptions {
    fn default() -> Self {
        Self {
            fit_policy: FitPolicy::default(),
            acquisition_budget: None,
        }
    }
}

/// Runs the initial design, then fit → maximize EI → evaluate until `budget`
/// evaluations exist. Larger objective values are better.
pub fn run_bo<R: Rng + ?Sized>(
    objective: &mut dyn Evaluator,
    space: &SearchSpace,
    strategy: &InitStrategy,
    budget: usize,
    rng: &mut R,
    options: &BoOptions,
) -> Result<Trace> {
    strategy.validate()?;
    if budget < strategy.count() {
        return Err(Error::BudgetTooSmall {
            budget,
            initial: strategy.count(),
        });
    }
    let mut trace = Trace::new(
        TraceMeta::new(*strategy, budget),
        space.names().map(str::to_owned).collect(),
    );
    let mut unit_inputs: Vec<Vec<f64>> = Vec::with_capacity(budget);

    for x in generate_initial(space, strategy, rng)? {
        observe(objective, space, x, &mut trace, &mut unit_inputs)?;
    }

    let candidates = options
        .acquisition_budget
        .unwrap_or_else(|| acquisition::default_budget(space.dimension()));
    while trace.len() < budget {
        let model = GpModel::fit(&unit_inputs, &trace.values(), &options.fit_policy)?;
        let incumbent = *trace.running_best().last().expect("initial design is non-empty");
        let proposal =
            acquisition::maximize_unit(&AcquisitionContext::new(&model, incumbent), rng, candidates)?;
        observe(objective, space, space.from_unit(&proposal.unit)?, &mut trace, &mut unit_inputs)?;
    }
    Ok(trace)
}

fn observe(
    objective: &mut dyn Evaluator,
    space: &SearchSpace,
    x: Configuration,
    trace: &mut Trace,
    unit_inputs: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let y = objective.evaluate(&x).map_err(|source| Error::Evaluation {
        configuration: x.0.clone(),
        source,
    })?;
    // the surrogate sees the configuration actually evaluated, after integer rounding
    unit_inputs.push(space.to_unit(&x)?);
    trace.push(x, y);
    Ok(())
}

/// Stable per-run seed derived from the experiment's base seed.
pub fn derive_seed(base: u64, objective: &str, arm: &str, repetition: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for part in [objective.as_bytes(), arm.as_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.update((repetition as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}
