//! A k-fold cross-validation stand-in: the base value plus the average of
//! `k` Gaussian fold errors, each drawn from a hash of the configuration,
//! the fold seed and the fold number. The result is a deterministic function
//! of `(x, fold_seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::Evaluator;
use crate::error::{EvalError, Error, Result};
use crate::space::Configuration;

pub struct CvObjective<E> {
    base: E,
    folds: usize,
    noise_scale: f64,
    fold_seed: u64,
}

/// Wraps `base` so each evaluation averages `folds` noisy fold scores.
pub fn cv_wrap<E: Evaluator>(
    base: E,
    folds: usize,
    noise_scale: f64,
    fold_seed: u64,
) -> Result<CvObjective<E>> {
    if folds == 0 {
        return Err(Error::InvalidParameter {
            name: "folds".into(),
            reason: "need at least one fold".into(),
        });
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise_scale".into(),
            reason: format!("must be finite and ≥ 0, got {noise_scale}"),
        });
    }
    Ok(CvObjective {
        base,
        folds,
        noise_scale,
        fold_seed,
    })
}

impl<E> CvObjective<E> {
    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// Standard-normal error of fold `j` (1-based) at `x`.
    pub fn fold_error(&self, x: &Configuration, j: usize) -> f64 {
        let mut h = Sha256::new();
        h.update((x.len() as u64).to_le_bytes());
        for v in x.values() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.fold_seed.to_le_bytes());
        h.update((j as u64).to_le_bytes());
        let seed: [u8; 32] = h.finalize().into();
        StandardNormal.sample(&mut ChaCha8Rng::from_seed(seed))
    }
}

impl<E: Evaluator> Evaluator for CvObjective<E> {
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        let base = self.base.evaluate(x)?;
        if self.noise_scale == 0.0 {
            return Ok(base);
        }
        let total: f64 = (1..=self.folds)
            .map(|j| base + self.noise_scale * self.fold_error(x, j))
            .sum();
        Ok(total / self.folds as f64)
    }
}
