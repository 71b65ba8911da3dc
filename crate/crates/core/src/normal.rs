//! Standard normal density, distribution and quantile functions.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Φ(z), evaluated through `erfc` so that the lower tail keeps full relative precision.
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z) without cancellation.
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p in [0, 1]; returns ±∞ at the endpoints.
///
/// The `erfc_inv` estimate is polished by one Newton step against [`cdf`]
/// (or [`sf`] in the upper half, where `1 − p` is exact).
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    let d = pdf(z);
    if d <= 0.0 || !z.is_finite() {
        return z;
    }
    if p <= 0.5 {
        z - (cdf(z) - p) / d
    } else {
        z + (sf(z) - (1.0 - p)) / d
    }
}
