//! Correlation of run metrics with the initialization concentration λ.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{early_late_means, mean, minmax_normalize, pearson, Correlation};
use crate::engine::{self, running_best};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityMetric {
    MaxPerformance,
    MeanPerformance,
    ConvergenceIndex,
    EarlyMean,
    LateMean,
}

impl SensitivityMetric {
    pub const ALL: [SensitivityMetric; 5] = [
        SensitivityMetric::MaxPerformance,
        SensitivityMetric::MeanPerformance,
        SensitivityMetric::ConvergenceIndex,
        SensitivityMetric::EarlyMean,
        SensitivityMetric::LateMean,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SensitivityMetric::MaxPerformance => "Max. performance",
            SensitivityMetric::MeanPerformance => "Mean performance",
            SensitivityMetric::ConvergenceIndex => "Convergence index",
            SensitivityMetric::EarlyMean => "Early mean",
            SensitivityMetric::LateMean => "Late mean",
        }
    }
}

impl fmt::Display for SensitivityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One run of a λ sweep: its objective, its λ and its raw objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub objective: String,
    pub lambda: f64,
    pub values: Vec<f64>,
}

/// Per-run summary metrics before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub max_performance: f64,
    pub mean_performance: f64,
    pub convergence_index: f64,
    pub early_mean: f64,
    pub late_mean: f64,
}

impl RunMetrics {
    pub fn from_values(values: &[f64], split: f64) -> Result<Self> {
        let r = running_best(values);
        let (early_mean, late_mean) = early_late_means(&r, split)?;
        Ok(Self {
            max_performance: engine::best_metric(values),
            mean_performance: mean(&r),
            convergence_index: engine::convergence_index(values) as f64,
            early_mean,
            late_mean,
        })
    }

    pub fn get(&self, m: SensitivityMetric) -> f64 {
        match m {
            SensitivityMetric::MaxPerformance => self.max_performance,
            SensitivityMetric::MeanPerformance => self.mean_performance,
            SensitivityMetric::ConvergenceIndex => self.convergence_index,
            SensitivityMetric::EarlyMean => self.early_mean,
            SensitivityMetric::LateMean => self.late_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub metric: SensitivityMetric,
    /// `None` when the normalized column is constant.
    pub correlation: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
    pub lambdas: Vec<f64>,
    pub runs: usize,
    pub split: f64,
    /// Pooled normalized metric values, in run order, per metric.
    pub normalized: BTreeMap<SensitivityMetric, Vec<f64>>,
    /// λ of each pooled run.
    pub run_lambdas: Vec<f64>,
}

impl SensitivityReport {
    pub fn row(&self, m: SensitivityMetric) -> &SensitivityRow {
        self.rows.iter().find(|r| r.metric == m).expect("every metric has a row")
    }
}

/// Correlates each metric with λ. Metrics are min–max normalized within each
/// objective, then pooled across objectives.
pub fn sensitivity_sweep(runs: &[SweepRun], split: f64) -> Result<SensitivityReport> {
    let mut lambdas: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "sensitivity analysis needs at least 3 distinct λ values, found {}",
            lambdas.len()
        )));
    }
    let metrics = runs
        .iter()
        .map(|r| RunMetrics::from_values(&r.values, split))
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in runs.iter().enumerate() {
        groups.entry(&r.objective).or_default().push(i);
    }

    let run_lambdas: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
    let mut normalized = BTreeMap::new();
    let mut rows = Vec::new();
    for m in SensitivityMetric::ALL {
        let mut column = vec![0.0; runs.len()];
        for idx in groups.values() {
            let raw: Vec<f64> = idx.iter().map(|&i| metrics[i].get(m)).collect();
            for (&i, v) in idx.iter().zip(minmax_normalize(&raw)) {
                column[i] = v;
            }
        }
        let constant = column.iter().all(|&v| v == column[0]);
        let correlation = if constant {
            None
        } else {
            Some(pearson(&run_lambdas, &column)?)
        };
        rows.push(SensitivityRow {
            metric: m,
            correlation,
        });
        normalized.insert(m, column);
    }
    Ok(SensitivityReport {
        rows,
        lambdas,
        runs: runs.len(),
        split,
        normalized,
        run_lambdas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::lambda_grid;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn run(objective: &str, lambda: f64, values: Vec<f64>) -> SweepRun {
        SweepRun {
            objective: objective.into(),
            lambda,
            values,
        }
    }

    #[test]
    fn early_mean_built_to_decrease() {
        // first value falls with λ, the final best is always 1
        let mut runs = Vec::new();
        for (k, &l) in lambda_grid().iter().enumerate() {
            for rep in 0..4 {
                let first = 0.9 - 0.1 * k as f64 - 0.001 * rep as f64;
                runs.push(run("f", l, vec![first, first, 0.95, 1.0]));
            }
        }
        let rep = sensitivity_sweep(&runs, 0.5).unwrap();
        let early = rep.row(SensitivityMetric::EarlyMean).correlation.unwrap();
        assert!(early.r < -0.9, "{}", early.r);
        assert!(rep.row(SensitivityMetric::MaxPerformance).correlation.is_none());
        assert!(rep.row(SensitivityMetric::LateMean).correlation.is_none());
        assert!(rep.row(SensitivityMetric::ConvergenceIndex).correlation.is_none());
    }

    #[test]
    fn constant_metrics_are_undefined() {
        let runs: Vec<_> = lambda_grid().iter().map(|&l| run("f", l, vec![0.5; 6])).collect();
        let rep = sensitivity_sweep(&runs, 0.5).unwrap();
        assert!(rep.rows.iter().all(|r| r.correlation.is_none()));
        assert_eq!(rep.rows.len(), 5);
    }

    #[test]
    fn needs_three_lambdas() {
        let runs = vec![run("f", 0.05, vec![0.1, 0.2]), run("f", 0.1, vec![0.3, 0.2])];
        assert!(sensitivity_sweep(&runs, 0.5).is_err());
    }

    #[test]
    fn normalization_is_per_objective() {
        // same shape on two scales; pooling raw values would mix the scales
        let mut runs = Vec::new();
        for (k, &l) in lambda_grid().iter().enumerate() {
            runs.push(run("a", l, vec![k as f64, 10.0]));
            runs.push(run("b", l, vec![1000.0 + 100.0 * k as f64, 2000.0]));
        }
        let rep = sensitivity_sweep(&runs, 0.5).unwrap();
        let col = &rep.normalized[&SensitivityMetric::EarlyMean];
        for pair in col.chunks(2) {
            assert_eq!(pair[0], pair[1]);
        }
        assert!((rep.row(SensitivityMetric::EarlyMean).correlation.unwrap().r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shuffled_lambda_control() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let grid = lambda_grid();
        let runs: Vec<SweepRun> = (0..50)
            .map(|i| {
                let v: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
                run("f", grid[i % 5], v)
            })
            .collect();
        let mut small = [0usize; 5];
        for _ in 0..100 {
            let mut lambdas: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
            lambdas.shuffle(&mut rng);
            let shuffled: Vec<SweepRun> = runs
                .iter()
                .zip(&lambdas)
                .map(|(r, &l)| run(&r.objective, l, r.values.clone()))
                .collect();
            let rep = sensitivity_sweep(&shuffled, 0.5).unwrap();
            for (k, row) in rep.rows.iter().enumerate() {
                if row.correlation.unwrap().p > 0.05 {
                    small[k] += 1;
                }
            }
        }
        // under the null each shuffle clears p > 0.05 with probability 0.95,
        // so 100 shuffles give Binomial(100, 0.95); 90 is below its 1% quantile
        for (k, &c) in small.iter().enumerate() {
            assert!(c >= 90, "row {k}: {c}/100");
        }
    }
}
