//! Evaluation protocol: relative improvements, win/tie/loss tallies, exact
//! one-sided binomial tests, spread, min–max scaling and Pearson
//! correlation.

mod sensitivity;

pub use sensitivity::{
    sensitivity_sweep, RunMetrics, SensitivityMetric, SensitivityReport, SensitivityRow, SweepRun,
};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.05;
pub const DEFAULT_TAU_CONV: f64 = 0.10;
pub const DEFAULT_TAU_METRIC: f64 = 0.003;

/// Relative speed-up of the challenger's mean convergence index over the
/// baseline's: `(μ_R − μ_D)/μ_R`. Positive means the challenger converged
/// earlier.
pub fn delta_conv(mu_random: f64, mu_default: f64) -> Result<f64> {
    if !(mu_random > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "baseline convergence mean must be positive, got {mu_random}"
        )));
    }
    Ok((mu_random - mu_default) / mu_random)
}

/// Relative gain of the challenger's mean best metric over the baseline's:
/// `(μ_D − μ_R)/|μ_R|`. Dividing by the magnitude keeps "positive means the
/// challenger is better" for negated losses such as −RMSE.
pub fn delta_metric(mu_random: f64, mu_default: f64) -> Result<f64> {
    if mu_random == 0.0 || !mu_random.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "baseline metric mean must be finite and non-zero, got {mu_random}"
        )));
    }
    Ok((mu_default - mu_random) / mu_random.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

/// Symmetric tie band: win above `tau`, loss below `−tau`.
pub fn classify(delta: f64, tau: f64) -> Outcome {
    if delta > tau {
        Outcome::Win
    } else if delta < -tau {
        Outcome::Loss
    } else {
        Outcome::Tie
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
}

impl Tally {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Win => self.wins += 1,
            Outcome::Loss => self.losses += 1,
            Outcome::Tie => self.ties += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.wins + self.losses + self.ties
    }
}

impl FromIterator<Outcome> for Tally {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        let mut t = Tally::default();
        for o in iter {
            t.add(o);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::Reject => "Reject",
            Decision::FailToReject => "Fail to reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialResult {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub n_total: u64,
    pub p_value: f64,
    pub decision: Decision,
}

/// Numerator of `P(X ≥ wins)` for `X ~ Binomial(n, ½)`; the probability is
/// this integer divided by `2ⁿ`.
pub fn upper_tail_numerator(wins: u64, n: u64) -> BigUint {
    if wins > n {
        return BigUint::zero();
    }
    // walk C(n, i) from i = n downwards: C(n, i−1) = C(n, i)·i/(n − i + 1)
    let mut c = BigUint::one();
    let mut sum = BigUint::zero();
    let mut i = n;
    loop {
        if i >= wins {
            sum += &c;
        }
        if i == wins || i == 0 {
            break;
        }
        c = c * i / (n - i + 1);
        i -= 1;
    }
    sum
}

fn ratio_to_f64(num: &BigUint, log2_den: u64) -> f64 {
    // keep 64 significant bits of the numerator before scaling
    let bits = num.bits();
    let shift = bits.saturating_sub(64);
    let top = (num >> shift).to_f64().expect("64-bit value fits f64");
    top * 2f64.powi(shift as i32 - log2_den as i32)
}

/// One-sided exact binomial test of `H₀: P(win) = ½` from win and loss
/// counts (ties already excluded).
pub fn binomial_test(wins: u64, losses: u64) -> Result<BinomialResult> {
    let n = wins + losses;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "binomial test needs at least one non-tied comparison".into(),
        ));
    }
    let p_value = ratio_to_f64(&upper_tail_numerator(wins, n), n).min(1.0);
    Ok(BinomialResult {
        wins,
        losses,
        ties: 0,
        n_total: n,
        p_value,
        decision: if p_value < ALPHA {
            Decision::Reject
        } else {
            Decision::FailToReject
        },
    })
}

/// [`binomial_test`] on a tally, carrying the tie count along.
pub fn binomial_from_tally(t: &Tally) -> Result<BinomialResult> {
    let mut r = binomial_test(t.wins, t.losses)?;
    r.ties = t.ties;
    Ok(r)
}

/// Mean relative range `(max r − min r)/min r` over running-best traces.
pub fn spread<T: AsRef<[f64]>>(traces: &[T]) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("spread of no traces".into()));
    }
    let mut total = 0.0;
    for t in traces {
        let t = t.as_ref();
        if t.is_empty() {
            return Err(Error::InvalidArgument("spread of an empty trace".into()));
        }
        let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spread needs positive running-best values, found minimum {lo}"
            )));
        }
        total += (hi - lo) / lo;
    }
    Ok(total / traces.len() as f64)
}

/// `(v − min)/(max − min)`; a constant vector maps to zeros.
pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    values
        .iter()
        .map(|&v| {
            if range > 0.0 {
                ((v - lo) / range).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of `H₀: ρ = 0`.
    pub p: f64,
    pub n: usize,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample Pearson correlation with a two-sided p-value from
/// `t = r·√((n−2)/(1−r²))` on `n − 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "Pearson correlation needs at least 3 pairs, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument(
            "Pearson correlation of a constant vector".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: correlation_p_value(r, n),
        n,
    })
}

/// Two-sided p-value for a sample correlation `r` from `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r.abs() * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df ≥ 1");
    (2.0 * dist.sf(t)).min(1.0)
}

/// Means of the running best over the first `⌈split·T⌉` iterations and over
/// the rest. The early phase is capped at `T − 1` iterations so the late
/// phase is never empty.
pub fn early_late_means(running_best: &[f64], split: f64) -> Result<(f64, f64)> {
    let t = running_best.len();
    if t < 2 {
        return Err(Error::InvalidArgument(format!(
            "early/late split needs at least 2 iterations, got {t}"
        )));
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction {split} outside (0, 1)"
        )));
    }
    let k = ((split * t as f64).ceil() as usize).clamp(1, t - 1);
    Ok((mean(&running_best[..k]), mean(&running_best[k..])))
}
