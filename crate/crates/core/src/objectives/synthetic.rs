//! Synthetic stand-ins for hyperparameter-response surfaces.
//!
//! Each function is defined on the unit cube (through the search space's
//! `to_unit` map) and has a single global maximum `optimum_value` at
//! `optimum`. A declared default location `default` scores exactly
//! `optimum_value − gap`, which makes the informativeness of the default a
//! tunable knob. With `c` the optimum, `m` the default, `g` the gap and
//! `v*` the optimum value:
//!
//! * **sphere-bowl**: `f(u) = v* − g·‖u − c‖² / ‖m − c‖²`
//! * **two-basin**: `f(u) = v* − g·(1 − max(b₁(u), κ·b₂(u))) / (1 − κ)` with
//!   `b₁(u) = exp(−‖u − c‖²/(2w₁²))`, `b₂(u) = exp(−‖u − m‖²/(2w₂²))`.
//!   The widths `w₁` (`optimum_width`, default 0.15), `w₂` (`default_width`,
//!   default 0.2) and the ratio `κ` (`basin_ratio`, default 0.9) are fields of
//!   [`SyntheticSpec`]. The default sits on top of a secondary basin; far from both
//!   basins the value is `v* − g/(1 − κ)`.
//! * **ridged**: `f(u) = v* − g·R(u)/R(m)` with
//!   `R(u) = Σᵢ (uᵢ − cᵢ)² + 0.02·Σᵢ (1 − cos(10π(uᵢ − cᵢ)))`, a bowl
//!   overlaid with ridges every 0.2 units along each axis.
//!
//! When the default coincides with the optimum the gap must be zero and
//! the bowl and ridged shapes fall back to unit scale.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Evaluator;
use crate::error::{EvalError, Error, Result};
use crate::space::{Configuration, SearchSpace};

const RIDGE_AMPLITUDE: f64 = 0.02;
const RIDGE_FREQUENCY: f64 = 10.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseFunction {
    SphereBowl,
    TwoBasin,
    Ridged,
}

fn default_optimum_value() -> f64 {
    1.0
}

fn default_optimum_width() -> f64 {
    0.15
}

fn default_default_width() -> f64 {
    0.2
}

fn default_basin_ratio() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub function: BaseFunction,
    /// Location of the global maximum in unit coordinates.
    pub optimum: Vec<f64>,
    /// Declared default location in unit coordinates.
    pub default: Vec<f64>,
    /// Deficit of the default relative to the optimum.
    pub gap: f64,
    #[serde(default = "default_optimum_value")]
    pub optimum_value: f64,
    /// Two-basin only: width of the optimum's basin.
    #[serde(default = "default_optimum_width")]
    pub optimum_width: f64,
    /// Two-basin only: width of the default's basin.
    #[serde(default = "default_default_width")]
    pub default_width: f64,
    /// Two-basin only: height of the default's basin relative to the optimum's.
    #[serde(default = "default_basin_ratio")]
    pub basin_ratio: f64,
}

impl SyntheticSpec {
    /// A spec with the default two-basin shape constants.
    pub fn new(function: BaseFunction, optimum: Vec<f64>, default: Vec<f64>, gap: f64) -> Self {
        Self {
            function,
            optimum,
            default,
            gap,
            optimum_value: default_optimum_value(),
            optimum_width: default_optimum_width(),
            default_width: default_default_width(),
            basin_ratio: default_basin_ratio(),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn ridge(u: &[f64], c: &[f64]) -> f64 {
    u.iter()
        .zip(c)
        .map(|(&a, &b)| {
            let t = a - b;
            t * t + RIDGE_AMPLITUDE * (1.0 - (RIDGE_FREQUENCY * t).cos())
        })
        .sum()
}

/// A validated synthetic objective over a search space.
#[derive(Debug, Clone)]
pub struct Synthetic {
    spec: SyntheticSpec,
    space: SearchSpace,
    /// Divisor turning the raw deficit shape into objective units.
    scale: f64,
}

impl Synthetic {
    pub fn new(spec: SyntheticSpec, space: SearchSpace) -> Result<Self> {
        let d = space.dimension();
        let bad = |m: String| Err(Error::Config(format!("synthetic objective: {m}")));
        if spec.optimum.len() != d || spec.default.len() != d {
            return bad(format!("optimum and default need {d} coordinates"));
        }
        if spec
            .optimum
            .iter()
            .chain(&spec.default)
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return bad("optimum and default must lie in the unit cube".into());
        }
        if !(spec.gap >= 0.0 && spec.gap.is_finite() && spec.optimum_value.is_finite()) {
            return bad(format!("gap must be finite and ≥ 0, got {}", spec.gap));
        }
        let separation = sq_dist(&spec.optimum, &spec.default);
        let at_optimum = separation == 0.0;
        if at_optimum != (spec.gap == 0.0) {
            return bad("gap is zero exactly when the default sits at the optimum".into());
        }
        let scale = match spec.function {
            BaseFunction::SphereBowl if at_optimum => 1.0,
            BaseFunction::SphereBowl => separation / spec.gap,
            BaseFunction::Ridged if at_optimum => 1.0,
            BaseFunction::Ridged => ridge(&spec.default, &spec.optimum) / spec.gap,
            BaseFunction::TwoBasin => {
                if at_optimum {
                    return bad("two-basin needs a default away from the optimum".into());
                }
                let (w1, w2, k) = (spec.optimum_width, spec.default_width, spec.basin_ratio);
                if !(w1 > 0.0 && w2 > 0.0 && w1.is_finite() && w2.is_finite() && k > 0.0 && k < 1.0) {
                    return bad("two-basin widths must be positive and basin_ratio in (0, 1)".into());
                }
                let b1 = (-separation / (2.0 * w1 * w1)).exp();
                if b1 > k {
                    return bad(format!(
                        "two-basin default is inside the optimum's basin (separation {:.3} < {:.3})",
                        separation.sqrt(),
                        w1 * (-2.0 * k.ln()).sqrt()
                    ));
                }
                (1.0 - k) / spec.gap
            }
        };
        Ok(Self { spec, space, scale })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// Objective value at a unit-cube point.
    pub fn value_unit(&self, u: &[f64]) -> f64 {
        let s = &self.spec;
        let deficit = match s.function {
            BaseFunction::SphereBowl => sq_dist(u, &s.optimum),
            BaseFunction::Ridged => ridge(u, &s.optimum),
            BaseFunction::TwoBasin => {
                let (w1, w2) = (s.optimum_width, s.default_width);
                let b1 = (-sq_dist(u, &s.optimum) / (2.0 * w1 * w1)).exp();
                let b2 = (-sq_dist(u, &s.default) / (2.0 * w2 * w2)).exp();
                1.0 - b1.max(s.basin_ratio * b2)
            }
        };
        s.optimum_value - deficit / self.scale
    }

    /// Lowest value on the unit cube (attained at a corner for the bowl shapes).
    pub fn lower_bound(&self) -> f64 {
        let s = &self.spec;
        match s.function {
            BaseFunction::TwoBasin => s.optimum_value - 1.0 / self.scale,
            BaseFunction::SphereBowl | BaseFunction::Ridged => {
                let far: Vec<f64> = s.optimum.iter().map(|&c| if c < 0.5 { 1.0 } else { 0.0 }).collect();
                let ridge_max = if s.function == BaseFunction::Ridged {
                    2.0 * RIDGE_AMPLITUDE * far.len() as f64
                } else {
                    0.0
                };
                s.optimum_value - (sq_dist(&far, &s.optimum) + ridge_max) / self.scale
            }
        }
    }
}

impl Evaluator for Synthetic {
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        let u = self
            .space
            .to_unit(x)
            .map_err(|e| EvalError::Process(e.to_string()))?;
        Ok(self.value_unit(&u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make(function: BaseFunction, optimum: &[f64], default: &[f64], gap: f64) -> Synthetic {
        Synthetic::new(
            SyntheticSpec::new(function, optimum.to_vec(), default.to_vec(), gap),
            SearchSpace::unit(default).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn optimum_and_default_values() {
        for f in [BaseFunction::SphereBowl, BaseFunction::TwoBasin, BaseFunction::Ridged] {
            let s = make(f, &[0.8, 0.2], &[0.25, 0.7], 0.1);
            assert_eq!(s.value_unit(&[0.8, 0.2]), 1.0);
            assert!((s.value_unit(&[0.25, 0.7]) - 0.9).abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn bowl_reproduces_quadratic() {
        // −(x − 0.3)² written as a bowl with v* = 0
        let s = Synthetic::new(
            SyntheticSpec {
                optimum_value: 0.0,
                ..SyntheticSpec::new(BaseFunction::SphereBowl, vec![0.3], vec![0.5], 0.04)
            },
            SearchSpace::unit(&[0.5]).unwrap(),
        )
        .unwrap();
        for x in [0.0, 0.3, 0.71, 1.0] {
            assert!((s.value_unit(&[x]) + (x - 0.3f64).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_basin_midpoint_closed_form() {
        let (c, m, g) = ([0.8, 0.2], [0.25, 0.7], 0.1);
        let s = make(BaseFunction::TwoBasin, &c, &m, g);
        let d2: f64 = 0.55f64.powi(2) + 0.5f64.powi(2);
        let b1 = (-d2 / 8.0 / 0.0225f64).exp();
        let b2 = (-d2 / 8.0 / 0.04f64).exp();
        let want = 1.0 - g * (1.0 - b1.max(0.9 * b2)) / 0.1;
        let got = s.value_unit(&[0.525, 0.45]);
        assert!((got - want).abs() < 1e-15);
        // hand value: d² = 0.5525, b₂ = exp(−1.7265625) = 0.177895…, b₁ = 0.046…,
        // so f = 1 − (1 − 0.9·0.177895) = 0.160105
        assert!((got - 0.160_105).abs() < 1e-6, "{got}");
    }

    #[test]
    fn rejects_inconsistent_specs() {
        let space = SearchSpace::unit(&[0.5]).unwrap();
        let spec = |function, optimum: f64, default: f64, gap| {
            SyntheticSpec::new(function, vec![optimum], vec![default], gap)
        };
        assert!(Synthetic::new(spec(BaseFunction::SphereBowl, 0.5, 0.5, 0.1), space.clone()).is_err());
        assert!(Synthetic::new(spec(BaseFunction::SphereBowl, 0.5, 0.6, 0.0), space.clone()).is_err());
        assert!(Synthetic::new(spec(BaseFunction::TwoBasin, 0.5, 0.55, 0.1), space.clone()).is_err());
        assert!(Synthetic::new(spec(BaseFunction::SphereBowl, 0.5, 0.5, 0.0), space.clone()).is_ok());
        assert!(Synthetic::new(spec(BaseFunction::SphereBowl, 1.5, 0.5, 0.1), space).is_err());
    }

    /// Dense-grid oracle: no grid point beats the documented optimum and the
    /// best grid point sits next to it.
    fn check_grid_1d(s: &Synthetic) {
        let n = 1_000_000;
        let (mut bx, mut bv) = (0.0, f64::NEG_INFINITY);
        let mut lo = f64::INFINITY;
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let v = s.value_unit(&[x]);
            lo = lo.min(v);
            if v > bv {
                bv = v;
                bx = x;
            }
        }
        assert!(bv <= 1.0);
        assert!((bx - s.spec().optimum[0]).abs() <= 1e-6);
        assert!(lo >= s.lower_bound() - 1e-12);
    }

    fn check_grid_2d(s: &Synthetic) {
        let n = 1000;
        let (mut best, mut bv) = ([0.0, 0.0], f64::NEG_INFINITY);
        let mut lo = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let u = [i as f64 / n as f64, j as f64 / n as f64];
                let v = s.value_unit(&u);
                lo = lo.min(v);
                if v > bv {
                    bv = v;
                    best = u;
                }
            }
        }
        assert!(bv <= 1.0);
        assert!(sq_dist(&best, &s.spec().optimum).sqrt() <= 1.5e-3, "{best:?}");
        assert!(lo >= s.lower_bound() - 1e-12);
    }

    #[test]
    fn documented_optima_match_dense_grid() {
        for f in [BaseFunction::SphereBowl, BaseFunction::TwoBasin, BaseFunction::Ridged] {
            check_grid_1d(&make(f, &[0.7123], &[0.15], 0.2));
            check_grid_2d(&make(f, &[0.8123, 0.2071], &[0.25, 0.7], 0.1));
        }
    }

    #[test]
    fn evaluates_through_the_space_map() {
        use crate::space::Parameter;
        let space = SearchSpace::new(vec![Parameter::log("lr", 1e-4, 1e-1, 1e-2)]).unwrap();
        let mut s = Synthetic::new(
            SyntheticSpec {
                optimum_value: 0.9,
                ..SyntheticSpec::new(BaseFunction::SphereBowl, vec![0.5], space.default_unit(), 0.05)
            },
            space,
        )
        .unwrap();
        let v = s.evaluate(&Configuration(vec![10f64.powf(-2.5)])).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
        let v = s.evaluate(&Configuration(vec![1e-2])).unwrap();
        assert!((v - 0.85).abs() < 1e-12);
    }
}
