//! Gaussian-process surrogate with a squared-exponential kernel.
//!
//! Inputs live in the unit cube. Targets are standardized before fitting
//! (zero prior mean on the standardized scale) and predictions are mapped
//! back to raw units. Kernel hyperparameters are either fixed by the caller
//! or chosen by maximizing the log marginal likelihood over a log-spaced
//! grid, followed by golden-section refinement of each coordinate.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::optimize::golden_section_max;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Result<Self> {
        let ok = signal_variance > 0.0
            && length_scale > 0.0
            && noise_variance >= 0.0
            && signal_variance.is_finite()
            && length_scale.is_finite()
            && noise_variance.is_finite();
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "kernel parameters out of range: σf²={signal_variance}, ℓ={length_scale}, σn²={noise_variance}"
            )));
        }
        Ok(Self {
            signal_variance,
            length_scale,
            noise_variance,
        })
    }

    #[inline]
    fn from_sq_dist(&self, sq: f64) -> f64 {
        self.signal_variance * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

/// σf²·exp(−‖x−x′‖²/(2ℓ²)).
pub fn kernel_eval(params: &KernelParams, x: &[f64], x_prime: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), x_prime.len());
    params.from_sq_dist(sq_dist(x, x_prime))
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Bounds and resolution of the evidence-maximizing hyperparameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceSearch {
    pub length_scale: (f64, f64),
    pub noise_variance: (f64, f64),
    pub length_scale_points: usize,
    pub noise_points: usize,
    /// Golden-section iterations in total, split evenly across the two coordinates.
    pub refine_iterations: usize,
}

impl Default for EvidenceSearch {
    fn default() -> Self {
        Self {
            length_scale: (0.05, 2.0),
            noise_variance: (1e-6, 1e-1),
            length_scale_points: 10,
            noise_points: 6,
            refine_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitPolicy {
    Fixed(KernelParams),
    MaximizeEvidence(EvidenceSearch),
}

impl Default for FitPolicy {
    fn default() -> Self {
        FitPolicy::MaximizeEvidence(EvidenceSearch::default())
    }
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Standardization constants: targets are `(y − mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Standardizer {
    mean: f64,
    std: f64,
}

impl Standardizer {
    fn fit(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = if y.len() > 1 {
            y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = if var > 0.0 && var.sqrt() > 1e-12 * mean.abs().max(1e-300) {
            var.sqrt()
        } else {
            1.0
        };
        Self { mean, std }
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.mean) / self.std).collect()
    }
}

/// Lower Cholesky factor of `K + (σn² + jitter)·I`, with jitter escalation.
struct Factor {
    l: DMatrix<f64>,
    jitter: f64,
}

fn factorize(sq: &DMatrix<f64>, params: &KernelParams) -> Result<Factor> {
    let n = sq.nrows();
    let base = sq.map(|d| params.from_sq_dist(d));
    // trace(K)/n equals σf² for a stationary kernel
    let scale = params.signal_variance;
    let mut jitter = JITTER_START * scale;
    loop {
        let mut m = base.clone();
        for i in 0..n {
            m[(i, i)] += params.noise_variance + jitter;
        }
        if let Some(c) = m.cholesky() {
            return Ok(Factor {
                l: c.unpack(),
                jitter,
            });
        }
        if jitter >= JITTER_MAX * scale * (1.0 - 1e-9) {
            return Err(Error::Cholesky { jitter });
        }
        jitter = (jitter * 10.0).min(JITTER_MAX * scale);
    }
}

fn forward_sub(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

/// `forward_sub` on a row-major factor.
fn forward_sub_rows(l: &[f64], b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let row = &l[i * n..i * n + i + 1];
        let s: f64 = row[..i].iter().zip(&b[..i]).map(|(a, c)| a * c).sum();
        b[i] = (b[i] - s) / row[i];
    }
}

fn backward_sub_transpose(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= l[(j, i)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

fn lml_from_factor(f: &Factor, y: &[f64]) -> f64 {
    let n = y.len();
    let mut v = y.to_vec();
    forward_sub(&f.l, &mut v);
    let quad: f64 = v.iter().map(|a| a * a).sum();
    let log_det: f64 = 2.0 * (0..n).map(|i| f.l[(i, i)].ln()).sum::<f64>();
    -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * PI).ln()
}

struct Data {
    n: usize,
    d: usize,
    flat: Vec<f64>,
    sq: DMatrix<f64>,
}

impl Data {
    fn new(inputs: &[Vec<f64>]) -> Result<Self> {
        let n = inputs.len();
        if n == 0 {
            return Err(Error::InvalidArgument("a GP needs at least one observation".into()));
        }
        let d = inputs[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional inputs".into()));
        }
        let mut flat = Vec::with_capacity(n * d);
        for row in inputs {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("GP inputs"));
            }
            flat.extend_from_slice(row);
        }
        let sq = DMatrix::from_fn(n, n, |i, j| {
            sq_dist(&flat[i * d..(i + 1) * d], &flat[j * d..(j + 1) * d])
        });
        Ok(Self { n, d, flat, sq })
    }
}

fn check_targets(targets: &[f64], n: usize) -> Result<()> {
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GP targets"));
    }
    Ok(())
}

/// Log marginal likelihood of the standardized targets under `params`.
pub fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    targets: &[f64],
    params: &KernelParams,
) -> Result<f64> {
    let data = Data::new(inputs)?;
    check_targets(targets, data.n)?;
    let y = Standardizer::fit(targets).apply(targets);
    Ok(lml_from_factor(&factorize(&data.sq, params)?, &y))
}

fn select_params(data: &Data, y: &[f64], search: &EvidenceSearch) -> Result<KernelParams> {
    let log_grid = |(lo, hi): (f64, f64), k: usize| -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        if k <= 1 {
            return vec![0.5 * (a + b)];
        }
        (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
    };
    let ls_grid = log_grid(search.length_scale, search.length_scale_points);
    let nz_grid = log_grid(search.noise_variance, search.noise_points);

    let score = |log_ls: f64, log_nz: f64| -> f64 {
        let p = KernelParams {
            signal_variance: 1.0,
            length_scale: log_ls.exp(),
            noise_variance: log_nz.exp(),
        };
        match factorize(&data.sq, &p) {
            Ok(f) => lml_from_factor(&f, y),
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (i, &ls) in ls_grid.iter().enumerate() {
        for (j, &nz) in nz_grid.iter().enumerate() {
            let s = score(ls, nz);
            if s > best.0 {
                best = (s, i, j);
            }
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::Cholesky {
            jitter: JITTER_MAX,
        });
    }
    let (mut value, bi, bj) = best;
    let mut log_ls = ls_grid[bi];
    let mut log_nz = nz_grid[bj];

    let bracket = |grid: &[f64], i: usize| -> (f64, f64) {
        (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)])
    };
    let per_coord = search.refine_iterations / 2;
    if per_coord > 0 {
        let (lo, hi) = bracket(&ls_grid, bi);
        if hi > lo {
            let (x, v) = golden_section_max(|t| score(t, log_nz), lo, hi, per_coord);
            if v > value {
                value = v;
                log_ls = x;
            }
        }
        let (lo, hi) = bracket(&nz_grid, bj);
        if hi > lo {
            let (x, v) = golden_section_max(|t| score(log_ls, t), lo, hi, per_coord);
            if v > value {
                log_nz = x;
            }
        }
    }
    Ok(KernelParams {
        signal_variance: 1.0,
        length_scale: log_ls.exp(),
        noise_variance: log_nz.exp(),
    })
}

/// A fitted, immutable GP posterior.
#[derive(Debug, Clone)]
pub struct GpModel {
    n: usize,
    d: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    kernel: KernelParams,
    chol: DMatrix<f64>,
    /// `chol` in row-major order, for the per-point triangular solve.
    chol_rows: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    standardizer: Standardizer,
}

impl GpModel {
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], policy: &FitPolicy) -> Result<Self> {
        let data = Data::new(inputs)?;
        check_targets(targets, data.n)?;
        let standardizer = Standardizer::fit(targets);
        let y = standardizer.apply(targets);
        let kernel = match policy {
            FitPolicy::Fixed(p) => *p,
            FitPolicy::MaximizeEvidence(search) => select_params(&data, &y, search)?,
        };
        let factor = factorize(&data.sq, &kernel)?;
        let mut alpha = y.clone();
        forward_sub(&factor.l, &mut alpha);
        backward_sub_transpose(&factor.l, &mut alpha);
        Ok(Self {
            n: data.n,
            d: data.d,
            inputs: data.flat,
            targets: y,
            kernel,
            chol_rows: (0..data.n)
                .flat_map(|i| (0..data.n).map(move |j| (i, j)))
                .map(|(i, j)| factor.l[(i, j)])
                .collect(),
            chol: factor.l,
            alpha,
            jitter: factor.jitter,
            standardizer,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    /// Standardized training targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn target_mean(&self) -> f64 {
        self.standardizer.mean
    }

    pub fn target_std(&self) -> f64 {
        self.standardizer.std
    }

    /// `K + (σn² + jitter)·I` on the training inputs.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(self.n, self.n, |i, j| {
            kernel_eval(&self.kernel, self.input(i), self.input(j))
        });
        for i in 0..self.n {
            m[(i, i)] += self.kernel.noise_variance + self.jitter;
        }
        m
    }

    /// Posterior mean and variance on the standardized scale, variance not clamped.
    pub fn posterior_standardized(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut k: Vec<f64> = (0..self.n)
            .map(|i| kernel_eval(&self.kernel, x, self.input(i)))
            .collect();
        let mean = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        forward_sub_rows(&self.chol_rows, &mut k);
        let var = self.kernel.signal_variance - k.iter().map(|v| v * v).sum::<f64>();
        Ok((mean, var))
    }

    /// Posterior mean and variance at `x` in raw target units; variance ≥ 0.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (m, v) = self.posterior_standardized(x)?;
        let s = self.standardizer;
        Ok((s.mean + s.std * m, v.max(0.0) * s.std * s.std))
    }
}
