//! Expected Improvement and its maximization over the unit cube.

use rand::Rng;

use crate::error::{Error, Result};
use crate::normal;
use crate::optimize::golden_section_max;
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::GpModel;

/// Below this standardized gap the closed form loses relative precision and
/// a continued fraction for the Mills ratio takes over.
const TAIL_SWITCH: f64 = -6.0;
/// Continued-fraction depth; 30 terms reach 1e-19 relative error at the switch.
const MILLS_TERMS: usize = 30;

/// Number of best random candidates that get local refinement.
pub const REFINE_STARTS: usize = 5;
/// Golden-section iterations spent on each refined start.
pub const REFINE_ITERATIONS: usize = 100;
const REFINE_SWEEPS: usize = 2;

/// E[max(f − incumbent, 0)] for f ~ N(mean, std²).
pub fn expected_improvement(mean: f64, std: f64, incumbent: f64) -> Result<f64> {
    if !(mean.is_finite() && std.is_finite() && incumbent.is_finite()) {
        return Err(Error::NonFinite("expected improvement inputs"));
    }
    if std < 0.0 {
        return Err(Error::InvalidArgument(format!("negative std {std}")));
    }
    Ok(ei(mean, std, incumbent))
}

#[inline]
fn ei(mean: f64, std: f64, incumbent: f64) -> f64 {
    let gap = mean - incumbent;
    if std == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / std;
    let scaled = if z >= TAIL_SWITCH {
        z * normal::cdf(z) + normal::pdf(z)
    } else {
        // zΦ(z) + φ(z) = φ(z)·c/(t + c), c = 1/(t + 2/(t + 3/(t + …))), t = −z
        let t = -z;
        let mut v = 0.0;
        for k in (2..=MILLS_TERMS).rev() {
            v = k as f64 / (t + v);
        }
        let c = 1.0 / (t + v);
        normal::pdf(z) * c / (t + c)
    };
    (std * scaled).max(gap.max(0.0))
}

/// A fitted surrogate paired with the best observation so far.
#[derive(Debug, Clone, Copy)]
pub struct AcquisitionContext<'a> {
    pub model: &'a GpModel,
    pub incumbent: f64,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(model: &'a GpModel, incumbent: f64) -> Self {
        Self { model, incumbent }
    }

    /// EI at a unit-cube point.
    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let (mean, var) = self.model.posterior(u)?;
        Ok(ei(mean, var.sqrt(), self.incumbent))
    }
}

/// Unit-cube maximizer of EI together with its value.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub unit: Vec<f64>,
    pub value: f64,
}

pub fn default_budget(dimension: usize) -> usize {
    1000 * dimension
}

/// Random multi-start search: `budget` uniform candidates, the top
/// [`REFINE_STARTS`] refined by coordinate-wise golden-section search.
pub fn maximize_unit<R: Rng + ?Sized>(
    ctx: &AcquisitionContext<'_>,
    rng: &mut R,
    budget: usize,
) -> Result<Proposal> {
    if budget == 0 {
        return Err(Error::InvalidArgument("acquisition budget must be ≥ 1".into()));
    }
    let d = ctx.model.dimension();
    let mut candidates = Vec::with_capacity(budget);
    for _ in 0..budget {
        let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let v = ctx.value(&u)?;
        candidates.push((u, v));
    }

    let mut order: Vec<usize> = (0..budget).collect();
    // stable: equal EI keeps the lower candidate index first
    order.sort_by(|&a, &b| candidates[b].1.total_cmp(&candidates[a].1));
    let mut starts: Vec<usize> = order.into_iter().take(REFINE_STARTS).collect();
    starts.sort_unstable();

    let half_width = (2.0 * (budget as f64).powf(-1.0 / d as f64)).min(0.25);
    let per_line = REFINE_ITERATIONS.div_ceil(REFINE_SWEEPS * d);

    let mut best: Option<Proposal> = None;
    for idx in starts {
        let (mut u, mut value) = candidates[idx].clone();
        for _ in 0..REFINE_SWEEPS {
            for i in 0..d {
                let lo = (u[i] - half_width).max(0.0);
                let hi = (u[i] + half_width).min(1.0);
                let mut probe = u.clone();
                let (x, v) = golden_section_max(
                    |t| {
                        probe[i] = t;
                        ctx.value(&probe).unwrap_or(f64::NEG_INFINITY)
                    },
                    lo,
                    hi,
                    per_line,
                );
                if v > value {
                    u[i] = x;
                    value = v;
                }
            }
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(Proposal { unit: u, value });
        }
    }
    Ok(best.expect("budget ≥ 1 yields at least one start"))
}

/// [`maximize_unit`] mapped back to a valid configuration of `space`.
pub fn maximize<R: Rng + ?Sized>(
    model: &GpModel,
    space: &SearchSpace,
    incumbent: f64,
    rng: &mut R,
    budget: usize,
) -> Result<Configuration> {
    if model.dimension() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            got: model.dimension(),
        });
    }
    let p = maximize_unit(&AcquisitionContext::new(model, incumbent), rng, budget)?;
    space.from_unit(&p.unit)
}
