//! Initial designs: uniform, truncated-Gaussian around the defaults, or the
//! default point alone.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::space::{Configuration, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum InitStrategy {
    Uniform { count: usize },
    TruncatedGaussian { count: usize, lambda: f64 },
    DefaultPoint,
}

impl InitStrategy {
    pub fn count(&self) -> usize {
        match *self {
            InitStrategy::Uniform { count } | InitStrategy::TruncatedGaussian { count, .. } => {
                count
            }
            InitStrategy::DefaultPoint => 1,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            InitStrategy::TruncatedGaussian { lambda, .. } => Some(lambda),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            InitStrategy::Uniform { .. } => "uniform",
            InitStrategy::TruncatedGaussian { .. } => "truncated-gaussian",
            InitStrategy::DefaultPoint => "default",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InitStrategy::Uniform { count } | InitStrategy::TruncatedGaussian { count, .. }
                if count == 0 =>
            {
                Err(Error::InvalidArgument("initial design count must be ≥ 1".into()))
            }
            InitStrategy::TruncatedGaussian { lambda, .. } if !(lambda > 0.0 && lambda < 1.0) => {
                Err(Error::InvalidArgument(format!("λ = {lambda} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitStrategy::Uniform { count } => write!(f, "uniform-n{count}"),
            InitStrategy::TruncatedGaussian { count, lambda } => {
                write!(f, "truncated-gaussian-n{count}-l{lambda}")
            }
            InitStrategy::DefaultPoint => f.write_str("default"),
        }
    }
}

/// Concentration values swept by the sensitivity study.
pub fn lambda_grid() -> Vec<f64> {
    (0..5).map(|i| 0.05 + 0.0625 * i as f64).collect()
}

/// One draw from N(mu, sigma²) truncated to [a, b], by inverting the
/// truncated distribution function.
pub fn truncnorm_sample<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(a < b) || !(a..=b).contains(&mu) || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "truncated normal needs a < b, a ≤ μ ≤ b and σ > 0 (got μ={mu}, σ={sigma}, [{a}, {b}])"
        )));
    }
    let u: f64 = rng.random();
    Ok(truncnorm_quantile(mu, sigma, a, b, u))
}

/// Quantile of TruncNormal(mu, sigma²; a, b) at probability `u`.
///
/// The window [Φ(α), Φ(β)] always contains ½ because a ≤ μ ≤ b, so the
/// lower half is inverted through Φ and the upper half through the survival
/// function, which keeps both tails free of cancellation.
pub fn truncnorm_quantile(mu: f64, sigma: f64, a: f64, b: f64, u: f64) -> f64 {
    let alpha = (a - mu) / sigma;
    let beta = (b - mu) / sigma;
    let (pa, pb) = (normal::cdf(alpha), normal::cdf(beta));
    let p = pa + u * (pb - pa);
    let z = if p <= 0.5 {
        normal::quantile(p)
    } else {
        let (qa, qb) = (normal::sf(alpha), normal::sf(beta));
        -normal::quantile(qb + (1.0 - u) * (qa - qb))
    };
    (mu + sigma * z).clamp(a, b)
}

/// Builds the initial design D₀ for `strategy`.
pub fn generate_initial<R: Rng + ?Sized>(
    space: &SearchSpace,
    strategy: &InitStrategy,
    rng: &mut R,
) -> Result<Vec<Configuration>> {
    strategy.validate()?;
    match *strategy {
        InitStrategy::DefaultPoint => Ok(vec![space.default_configuration()]),
        InitStrategy::Uniform { count } => (0..count)
            .map(|_| {
                let u: Vec<f64> = (0..space.dimension()).map(|_| rng.random()).collect();
                space.from_unit(&u)
            })
            .collect(),
        InitStrategy::TruncatedGaussian { count, lambda } => {
            // σ = λ·(b − a) is λ in unit coordinates, on either scale
            let centre = space.default_unit();
            (0..count)
                .map(|_| {
                    let u = centre
                        .iter()
                        .map(|&m| truncnorm_sample(m, lambda, 0.0, 1.0, rng))
                        .collect::<Result<Vec<f64>>>()?;
                    space.from_unit(&u)
                })
                .collect()
        }
    }
}
