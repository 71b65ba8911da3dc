//! Objective functions. Every evaluator returns larger-is-better values.

mod cv;
mod external;
mod synthetic;

pub use cv::{cv_wrap, CvObjective};
pub use external::{ExternalEvaluator, ExternalSpec, Request, Response};
pub use synthetic::{BaseFunction, Synthetic, SyntheticSpec};

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Error, Result};
use crate::space::{Configuration, SearchSpace};

/// Something that scores configurations. `&mut self` lets process-backed
/// evaluators keep their connection state.
pub trait Evaluator {
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError>;
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        (**self).evaluate(x)
    }
}

/// Adapts a closure; mostly for tests and quick experiments.
pub struct FnEvaluator<F>(F);

impl<F: FnMut(&Configuration) -> f64> FnEvaluator<F> {
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F: FnMut(&Configuration) -> f64> Evaluator for FnEvaluator<F> {
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        let v = (self.0)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }
}

/// Whether the raw metric is a score (higher is better) or a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Maximize,
    Minimize,
}

impl Orientation {
    /// Maps a raw metric onto the larger-is-better scale.
    pub fn normalize(self, raw: f64) -> f64 {
        match self {
            Orientation::Maximize => raw,
            Orientation::Minimize => -raw,
        }
    }
}

/// A named objective over a search space.
pub struct Objective {
    pub id: String,
    pub space: SearchSpace,
    evaluator: Box<dyn Evaluator + Send>,
}

impl Objective {
    pub fn new(id: impl Into<String>, space: SearchSpace, evaluator: Box<dyn Evaluator + Send>) -> Self {
        Self {
            id: id.into(),
            space,
            evaluator,
        }
    }

    /// Validates `x` against the space, then evaluates it.
    pub fn evaluate(&mut self, x: &Configuration) -> Result<f64> {
        self.space.check(x)?;
        self.evaluator
            .evaluate(x)
            .map_err(|source| Error::Evaluation {
                configuration: x.0.clone(),
                source,
            })
    }

    pub fn evaluator_mut(&mut self) -> &mut (dyn Evaluator + Send) {
        self.evaluator.as_mut()
    }
}

impl Evaluator for Objective {
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        self.evaluator.evaluate(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_negates_losses() {
        assert_eq!(Orientation::Minimize.normalize(0.3), -0.3);
        assert_eq!(Orientation::Maximize.normalize(0.3), 0.3);
    }

    #[test]
    fn objective_validates_before_evaluating() {
        let space = SearchSpace::unit(&[0.5]).unwrap();
        let mut o = Objective::new("f", space, Box::new(FnEvaluator::new(|x: &Configuration| x.0[0])));
        assert_eq!(o.evaluate(&Configuration(vec![0.25])).unwrap(), 0.25);
        assert!(matches!(
            o.evaluate(&Configuration(vec![2.0])),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn fn_evaluator_rejects_nan() {
        let mut f = FnEvaluator::new(|_: &Configuration| f64::NAN);
        assert!(f.evaluate(&Configuration(vec![0.0])).is_err());
    }
}
