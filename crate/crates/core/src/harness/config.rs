//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "demo"
//! base_seed = 7
//! repetitions = 10
//! output_dir = "runs/demo"
//!
//! [thresholds]
//! tau_conv = 0.10
//! tau_metric = 0.003          # or "min-spread"
//!
//! [[objective]]
//! id = "bowl"
//! function = "sphere-bowl"
//! optimum = [0.8, 0.3]
//! default = [0.5, 0.5]
//! gap = 0.05
//!
//! [[objective]]
//! id = "svc"
//! kind = "external"
//! space = "spaces/svc.toml"
//! command = "python3 evaluate_svc.py"
//!
//! [[arm]]
//! strategy = "truncated-gaussian"
//! count = [3, 4, 5]
//! lambda = "grid"
//! budget = 30
//! ```
//!
//! Relative `space` and `output_dir` paths resolve against the directory of
//! the configuration file, and external commands run from that directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{lambda_grid, InitStrategy};
use crate::objectives::{BaseFunction, ExternalSpec, Orientation, SyntheticSpec};
use crate::space::SearchSpace;
use crate::stats::{DEFAULT_TAU_CONV, DEFAULT_TAU_METRIC};

fn default_repetitions() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Whether an arm's `budget` counts the initial design or only the BO
/// iterations that follow it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetConvention {
    #[default]
    Inclusive,
    Additional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauMetric {
    Value(f64),
    Rule(TauRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauRule {
    /// Smallest per-objective spread among the compared traces.
    MinSpread,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "Thresholds::default_conv")]
    pub tau_conv: f64,
    #[serde(default = "Thresholds::default_metric")]
    pub tau_metric: TauMetric,
}

impl Thresholds {
    fn default_conv() -> f64 {
        DEFAULT_TAU_CONV
    }

    fn default_metric() -> TauMetric {
        TauMetric::Value(DEFAULT_TAU_METRIC)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_conv: DEFAULT_TAU_CONV,
            tau_metric: TauMetric::Value(DEFAULT_TAU_METRIC),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    #[default]
    Synthetic,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub id: String,
    #[serde(default)]
    pub kind: ObjectiveKind,
    /// Search-space file; synthetic objectives default to a unit cube.
    pub space: Option<PathBuf>,
    pub function: Option<BaseFunction>,
    pub optimum: Option<Vec<f64>>,
    /// Default location in unit coordinates; taken from the space file when omitted.
    pub default: Option<Vec<f64>>,
    pub gap: Option<f64>,
    pub optimum_value: Option<f64>,
    pub optimum_width: Option<f64>,
    pub default_width: Option<f64>,
    pub basin_ratio: Option<f64>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub cv_noise: f64,
    pub command: Option<String>,
    pub timeout_secs: Option<f64>,
    #[serde(default)]
    pub orientation: Orientation,
}

fn default_folds() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Grid(LambdaGrid),
    Values(OneOrMany<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaGrid {
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyTag {
    Uniform,
    TruncatedGaussian,
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub strategy: StrategyTag,
    pub count: Option<OneOrMany<usize>>,
    pub lambda: Option<LambdaSpec>,
    pub budget: usize,
    /// Objective ids this arm runs on; all objectives when omitted.
    pub objectives: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub budget_convention: BudgetConvention,
    /// EI candidates per iteration; defaults to 1000·d.
    pub acquisition_budget: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(rename = "objective", default)]
    pub objectives: Vec<ObjectiveConfig>,
    #[serde(rename = "arm", default)]
    pub arms: Vec<ArmConfig>,
    /// Directory the configuration was loaded from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A concrete arm: one strategy with one count, λ and total budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    pub strategy: InitStrategy,
    /// Total evaluations, initial design included.
    pub budget: usize,
    pub objectives: Option<Vec<String>>,
}

impl Arm {
    pub fn applies_to(&self, objective: &str) -> bool {
        self.objectives
            .as_ref()
            .is_none_or(|ids| ids.iter().any(|i| i == objective))
    }
}

pub fn arm_name(strategy: &InitStrategy, budget: usize) -> String {
    match *strategy {
        InitStrategy::Uniform { count } => format!("uniform-n{count}-T{budget}"),
        InitStrategy::TruncatedGaussian { count, lambda } => {
            format!("tg-n{count}-l{lambda}-T{budget}")
        }
        InitStrategy::DefaultPoint => format!("default-T{budget}"),
    }
}

/// How an objective is evaluated, after path resolution and validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSource {
    Synthetic(SyntheticSpec),
    External(ExternalSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedObjective {
    pub id: String,
    pub space: SearchSpace,
    pub source: ObjectiveSource,
    pub cv_folds: usize,
    pub cv_noise: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut c: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.base_dir = base_dir.into();
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, dir).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve_path(&self.output_dir)
    }

    /// Expands every arm into concrete strategies, in declaration order.
    pub fn expand_arms(&self) -> Result<Vec<Arm>> {
        let mut out = Vec::new();
        for (k, a) in self.arms.iter().enumerate() {
            let bad = |m: String| Error::Config(format!("arm #{}: {m}", k + 1));
            let counts = match (&a.strategy, &a.count) {
                (StrategyTag::Default, None) => vec![1],
                (StrategyTag::Default, Some(_)) => {
                    return Err(bad("the default strategy takes no count".into()))
                }
                (_, Some(c)) => c.to_vec(),
                (_, None) => return Err(bad("count is required".into())),
            };
            let lambdas: Vec<Option<f64>> = match (&a.strategy, &a.lambda) {
                (StrategyTag::TruncatedGaussian, Some(LambdaSpec::Grid(_))) => {
                    lambda_grid().into_iter().map(Some).collect()
                }
                (StrategyTag::TruncatedGaussian, Some(LambdaSpec::Values(v))) => {
                    v.to_vec().into_iter().map(Some).collect()
                }
                (StrategyTag::TruncatedGaussian, None) => {
                    return Err(bad("lambda is required".into()))
                }
                (_, Some(_)) => return Err(bad("lambda only applies to truncated-gaussian".into())),
                (_, None) => vec![None],
            };
            for &count in &counts {
                for &lambda in &lambdas {
                    let strategy = match a.strategy {
                        StrategyTag::Uniform => InitStrategy::Uniform { count },
                        StrategyTag::TruncatedGaussian => InitStrategy::TruncatedGaussian {
                            count,
                            lambda: lambda.expect("set above"),
                        },
                        StrategyTag::Default => InitStrategy::DefaultPoint,
                    };
                    strategy.validate().map_err(|e| bad(e.to_string()))?;
                    let budget = match self.budget_convention {
                        BudgetConvention::Inclusive => a.budget,
                        BudgetConvention::Additional => a.budget + strategy.count(),
                    };
                    if budget < strategy.count() {
                        return Err(bad(format!(
                            "budget {budget} is smaller than the initial design ({})",
                            strategy.count()
                        )));
                    }
                    out.push(Arm {
                        name: arm_name(&strategy, budget),
                        strategy,
                        budget,
                        objectives: a.objectives.clone(),
                    });
                }
            }
        }
        let mut seen = BTreeSet::new();
        for a in &out {
            if !seen.insert(&a.name) {
                return Err(Error::Config(format!("arm `{}` is declared twice", a.name)));
            }
        }
        Ok(out)
    }

    pub fn resolve_objective(&self, o: &ObjectiveConfig) -> Result<ResolvedObjective> {
        let bad = |m: String| Error::Config(format!("objective `{}`: {m}", o.id));
        if o.id.is_empty() || o.id.contains(['/', '\\']) || o.id.contains("__") {
            return Err(bad("ids must be non-empty and free of `/` and `__`".into()));
        }
        if o.cv_folds == 0 {
            return Err(bad("cv_folds must be ≥ 1".into()));
        }
        if !(o.cv_noise >= 0.0 && o.cv_noise.is_finite()) {
            return Err(bad("cv_noise must be finite and ≥ 0".into()));
        }
        let file_space = match &o.space {
            Some(p) => Some(SearchSpace::load(self.resolve_path(p)).map_err(|e| bad(e.to_string()))?),
            None => None,
        };
        let (space, source) = match o.kind {
            ObjectiveKind::Synthetic => {
                if o.command.is_some() || o.timeout_secs.is_some() {
                    return Err(bad("command and timeout_secs apply to external objectives".into()));
                }
                let function = o.function.ok_or_else(|| bad("function is required".into()))?;
                let optimum = o.optimum.clone().ok_or_else(|| bad("optimum is required".into()))?;
                let gap = o.gap.ok_or_else(|| bad("gap is required".into()))?;
                let (space, default) = match (file_space, &o.default) {
                    (Some(_), Some(_)) => {
                        return Err(bad("give either a space file or a unit default, not both".into()))
                    }
                    (Some(s), None) => {
                        let d = s.default_unit();
                        (s, d)
                    }
                    (None, Some(d)) => (SearchSpace::unit(d).map_err(|e| bad(e.to_string()))?, d.clone()),
                    (None, None) => return Err(bad("default or space is required".into())),
                };
                let base = SyntheticSpec::new(function, optimum, default, gap);
                let spec = SyntheticSpec {
                    optimum_value: o.optimum_value.unwrap_or(base.optimum_value),
                    optimum_width: o.optimum_width.unwrap_or(base.optimum_width),
                    default_width: o.default_width.unwrap_or(base.default_width),
                    basin_ratio: o.basin_ratio.unwrap_or(base.basin_ratio),
                    ..base
                };
                // checks the synthetic definition against the space
                crate::objectives::Synthetic::new(spec.clone(), space.clone())
                    .map_err(|e| bad(e.to_string()))?;
                (space, ObjectiveSource::Synthetic(spec))
            }
            ObjectiveKind::External => {
                let synthetic_only = [o.gap, o.optimum_value, o.optimum_width, o.default_width, o.basin_ratio];
                if o.function.is_some()
                    || o.optimum.is_some()
                    || o.default.is_some()
                    || synthetic_only.iter().any(Option::is_some)
                {
                    return Err(bad("synthetic fields given for an external objective".into()));
                }
                let space = file_space.ok_or_else(|| bad("external objectives need a space file".into()))?;
                let command = o.command.clone().ok_or_else(|| bad("command is required".into()))?;
                let spec = ExternalSpec {
                    command,
                    timeout_secs: o.timeout_secs.unwrap_or(300.0),
                    orientation: o.orientation,
                    // commands are written relative to the configuration file
                    workdir: (!self.base_dir.as_os_str().is_empty()).then(|| self.base_dir.clone()),
                };
                (space, ObjectiveSource::External(spec))
            }
        };
        Ok(ResolvedObjective {
            id: o.id.clone(),
            space,
            source,
            cv_folds: o.cv_folds,
            cv_noise: o.cv_noise,
        })
    }

    /// Validates the whole configuration and resolves every objective.
    pub fn resolve(&self) -> Result<(Vec<ResolvedObjective>, Vec<Arm>)> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be ≥ 1".into()));
        }
        if self.objectives.is_empty() || self.arms.is_empty() {
            return Err(Error::Config("need at least one objective and one arm".into()));
        }
        if self.acquisition_budget == Some(0) {
            return Err(Error::Config("acquisition_budget must be ≥ 1".into()));
        }
        let t = &self.thresholds;
        let metric_ok = match t.tau_metric {
            TauMetric::Value(v) => v >= 0.0 && v.is_finite(),
            TauMetric::Rule(_) => true,
        };
        if !(t.tau_conv >= 0.0 && t.tau_conv.is_finite()) || !metric_ok {
            return Err(Error::Config("thresholds must be finite and ≥ 0".into()));
        }
        let mut ids = BTreeSet::new();
        let mut objectives = Vec::new();
        for o in &self.objectives {
            if !ids.insert(o.id.as_str()) {
                return Err(Error::Config(format!("objective `{}` is declared twice", o.id)));
            }
            objectives.push(self.resolve_objective(o)?);
        }
        let arms = self.expand_arms()?;
        for (k, a) in self.arms.iter().enumerate() {
            for id in a.objectives.iter().flatten() {
                if !ids.contains(id.as_str()) {
                    return Err(Error::Config(format!(
                        "arm #{} references unknown objective id `{id}`",
                        k + 1
                    )));
                }
            }
        }
        Ok((objectives, arms))
    }
}
