//! Bounded hyperparameter domains.
//!
//! A [`SearchSpace`] is an ordered list of numeric [`Parameter`]s, each with
//! inclusive bounds and a declared default. The optimizer never works in raw
//! units: every configuration is mapped to the unit cube with [`SearchSpace::to_unit`]
//! (affinely, or affinely in `ln` for logarithmic parameters) and mapped back
//! with [`SearchSpace::from_unit`], which is also where integer parameters are
//! rounded.
//!
//! Spaces are usually loaded from TOML:
//!
//! ```toml
//! [[parameter]]
//! name = "gamma"
//! scale = "log"          # "linear" (default) or "log"
//! kind = "continuous"    # "continuous" (default) or "integer"
//! lower = 1e-4
//! upper = 1.0
//! default = 0.01
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    #[serde(alias = "logarithmic")]
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub kind: Kind,
    pub lower: f64,
    pub upper: f64,
    pub default: f64,
}

impl Parameter {
    pub fn linear(name: impl Into<String>, lower: f64, upper: f64, default: f64) -> Self {
        Self {
            name: name.into(),
            scale: Scale::Linear,
            kind: Kind::Continuous,
            lower,
            upper,
            default,
        }
    }

    pub fn log(name: impl Into<String>, lower: f64, upper: f64, default: f64) -> Self {
        Self {
            scale: Scale::Log,
            ..Self::linear(name, lower, upper, default)
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64, default: f64) -> Self {
        Self {
            kind: Kind::Integer,
            ..Self::linear(name, lower, upper, default)
        }
    }

    pub fn with_scale(mut self, scale: Scale) -> Self {
        self.scale = scale;
        self
    }

    fn check(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidParameter {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.is_empty() {
            return fail("empty name");
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.default.is_finite()) {
            return fail("bounds and default must be finite");
        }
        if self.lower >= self.upper {
            return fail("lower must be strictly below upper");
        }
        if self.default < self.lower || self.default > self.upper {
            return fail("default lies outside [lower, upper]");
        }
        if self.scale == Scale::Log && self.lower <= 0.0 {
            return fail("logarithmic scale requires lower > 0");
        }
        if self.kind == Kind::Integer
            && [self.lower, self.upper, self.default]
                .iter()
                .any(|v| v.fract() != 0.0)
        {
            return fail("integer parameter needs whole-number bounds and default");
        }
        Ok(())
    }

    /// Position of `v` in `[0, 1]` on this parameter's scale.
    pub fn to_unit(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => (v - self.lower) / (self.upper - self.lower),
            Scale::Log => (v.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln()),
        }
    }

    /// Inverse of [`Parameter::to_unit`], rounded and clamped for integers.
    pub fn from_unit(&self, u: f64) -> f64 {
        let v = match self.scale {
            Scale::Linear => self.lower + u * (self.upper - self.lower),
            Scale::Log => (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp(),
        };
        let v = match self.kind {
            Kind::Continuous => v,
            Kind::Integer => v.round(),
        };
        v.clamp(self.lower, self.upper)
    }
}

/// A point of the search space in raw parameter units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    #[serde(rename = "parameter")]
    parameters: Vec<Parameter>,
}

impl SearchSpace {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::InvalidSpace("a search space needs at least one parameter".into()));
        }
        let mut seen = HashSet::new();
        for p in &parameters {
            p.check()?;
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate parameter name `{}`", p.name)));
            }
        }
        Ok(Self { parameters })
    }

    /// `d` linear parameters `x1..xd` on `[0, 1]` with the given defaults.
    pub fn unit(defaults: &[f64]) -> Result<Self> {
        Self::new(
            defaults
                .iter()
                .enumerate()
                .map(|(i, &d)| Parameter::linear(format!("x{}", i + 1), 0.0, 1.0, d))
                .collect(),
        )
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: SearchSpace =
            toml::from_str(text).map_err(|e| Error::Config(format!("search space: {e}")))?;
        Self::new(raw.parameters)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    pub fn dimension(&self) -> usize {
        self.parameters.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.parameters.iter().map(|p| p.name.as_str())
    }

    /// Lists every bound or integrality violation of `x`; empty means valid.
    pub fn validate(&self, x: &Configuration) -> Vec<String> {
        if x.len() != self.dimension() {
            return vec![format!(
                "expected {} values, got {}",
                self.dimension(),
                x.len()
            )];
        }
        let mut violations = Vec::new();
        for (p, &v) in self.parameters.iter().zip(x.values()) {
            if !v.is_finite() {
                violations.push(format!("{}: non-finite value {v}", p.name));
            } else if v < p.lower || v > p.upper {
                violations.push(format!(
                    "{}: {v} outside [{}, {}]",
                    p.name, p.lower, p.upper
                ));
            } else if p.kind == Kind::Integer && v.fract() != 0.0 {
                violations.push(format!("{}: {v} is not a whole number", p.name));
            }
        }
        violations
    }

    pub fn check(&self, x: &Configuration) -> Result<()> {
        let violations = self.validate(x);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(violations))
        }
    }

    pub fn to_unit(&self, x: &Configuration) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self
            .parameters
            .iter()
            .zip(x.values())
            .map(|(p, &v)| p.to_unit(v).clamp(0.0, 1.0))
            .collect())
    }

    pub fn from_unit(&self, u: &[f64]) -> Result<Configuration> {
        if u.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: u.len(),
            });
        }
        if let Some((index, &value)) = u
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutsideUnitCube { index, value });
        }
        Ok(Configuration(
            self.parameters
                .iter()
                .zip(u)
                .map(|(p, &ui)| p.from_unit(ui))
                .collect(),
        ))
    }

    pub fn default_configuration(&self) -> Configuration {
        Configuration(self.parameters.iter().map(|p| p.default).collect())
    }

    /// Unit-cube coordinates of the declared defaults.
    pub fn default_unit(&self) -> Vec<f64> {
        self.parameters
            .iter()
            .map(|p| p.to_unit(p.default).clamp(0.0, 1.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(p: Parameter) -> SearchSpace {
        SearchSpace::new(vec![p]).unwrap()
    }

    #[test]
    fn validate_bounds_are_inclusive() {
        let s = one(Parameter::linear("x", 0.0, 1.0, 0.5));
        assert!(s.validate(&vec![0.5].into()).is_empty());
        assert!(s.validate(&vec![1.0].into()).is_empty());
        let v = s.validate(&vec![1.5].into());
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("x:"));
    }

    #[test]
    fn validate_reports_integrality() {
        let s = one(Parameter::integer("n", 1.0, 20.0, 5.0));
        assert_eq!(s.validate(&vec![3.5].into()).len(), 1);
    }

    #[test]
    fn unit_maps() {
        let lin = one(Parameter::linear("x", 0.0, 10.0, 1.0));
        assert_eq!(lin.to_unit(&vec![2.5].into()).unwrap(), vec![0.25]);
        assert_eq!(lin.from_unit(&[0.25]).unwrap().0, vec![2.5]);

        let log = one(Parameter::log("lr", 1e-4, 1e-1, 1e-2));
        assert_eq!(log.to_unit(&vec![1e-4].into()).unwrap(), vec![0.0]);
        let mid = log.to_unit(&vec![10f64.powf(-2.5)].into()).unwrap()[0];
        assert!((mid - 0.5).abs() < 1e-12, "{mid}");
    }

    #[test]
    fn integer_rounding() {
        let s = one(Parameter::integer("leaf", 1.0, 20.0, 1.0));
        let u = s.to_unit(&vec![7.0].into()).unwrap();
        assert_eq!(s.from_unit(&u).unwrap().0, vec![7.0]);
        assert_eq!(s.from_unit(&[0.999]).unwrap().0, vec![20.0]);
    }

    #[test]
    fn from_unit_rejects_outside_cube() {
        let s = one(Parameter::linear("x", 0.0, 1.0, 0.5));
        assert!(matches!(
            s.from_unit(&[1.2]),
            Err(Error::OutsideUnitCube { index: 0, .. })
        ));
    }

    #[test]
    fn defaults() {
        let s = SearchSpace::new(vec![
            Parameter::log("C", 0.1, 10.0, 1.0),
            Parameter::log("gamma", 1e-4, 1.0, 0.01),
            Parameter::integer("degree", 2.0, 5.0, 3.0),
        ])
        .unwrap();
        assert_eq!(s.default_configuration().0, vec![1.0, 0.01, 3.0]);

        let edge = one(Parameter::linear("coef0", 0.0, 1.0, 0.0));
        assert_eq!(edge.default_configuration().0, vec![0.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SearchSpace::new(vec![Parameter::linear("x", 1.0, 1.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![Parameter::linear("x", 0.0, 1.0, 2.0)]).is_err());
        assert!(SearchSpace::new(vec![Parameter::log("x", 0.0, 1.0, 0.5)]).is_err());
        assert!(SearchSpace::new(vec![Parameter::integer("x", 0.5, 3.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![
            Parameter::linear("x", 0.0, 1.0, 0.5),
            Parameter::linear("x", 0.0, 1.0, 0.5)
        ])
        .is_err());
        assert!(SearchSpace::new(vec![]).is_err());
    }

    #[test]
    fn parses_toml() {
        let s = SearchSpace::from_toml_str(
            r#"
            [[parameter]]
            name = "alpha"
            scale = "log"
            lower = 1e-5
            upper = 1e-1
            default = 1e-3

            [[parameter]]
            name = "n_layers"
            kind = "integer"
            lower = 1
            upper = 5
            default = 1
            "#,
        )
        .unwrap();
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.parameters()[0].scale, Scale::Log);
        assert_eq!(s.parameters()[1].kind, Kind::Integer);
    }

    fn arb_param() -> impl Strategy<Value = Parameter> {
        (
            prop_oneof![Just(Scale::Linear), Just(Scale::Log)],
            1e-3f64..10.0,
            1.001f64..1e3,
            0.0f64..1.0,
        )
            .prop_map(|(scale, lower, ratio, t)| {
                let upper = lower * ratio;
                Parameter::linear("p", lower, upper, lower + t * (upper - lower))
                    .with_scale(scale)
            })
    }

    proptest! {
        #[test]
        fn round_trip_and_monotone(p in arb_param(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let s = one(p.clone());
            let v1 = p.lower + t1 * (p.upper - p.lower);
            let v2 = p.lower + t2 * (p.upper - p.lower);
            let u1 = s.to_unit(&vec![v1].into()).unwrap()[0];
            let back = s.from_unit(&[u1]).unwrap().0[0];
            prop_assert!((back - v1).abs() <= 1e-12 * v1.abs().max(p.upper.abs()));
            let u2 = s.to_unit(&vec![v2].into()).unwrap()[0];
            if v1 < v2 { prop_assert!(u1 <= u2); }
            prop_assert!(s.validate(&s.default_configuration()).is_empty());
        }

        #[test]
        fn integer_round_trip(lower in 0i32..50, width in 1i32..100, k in 0i32..100) {
            let upper = lower + width;
            let v = (lower + k % (width + 1)) as f64;
            let s = one(Parameter::integer("n", lower as f64, upper as f64, lower as f64));
            let u = s.to_unit(&vec![v].into()).unwrap();
            prop_assert_eq!(s.from_unit(&u).unwrap().0[0], v);
        }
    }
}
