//! One-dimensional derivative-free maximization.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
///
/// Runs at most `iterations` interval reductions (one new evaluation each)
/// and returns the best evaluated point, so the result is never worse than
/// the two interior probes.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    iterations: usize,
) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 0..iterations {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.37) * (x - 0.37), 0.0, 1.0, 100);
        assert!((x - 0.37).abs() < 1e-6);
        assert!(v > -1e-12);
    }

    #[test]
    fn boundary_maximum() {
        let (x, _) = golden_section_max(|x| x, 0.0, 1.0, 100);
        assert!(x > 1.0 - 1e-6);
    }

    #[test]
    fn zero_iterations_returns_a_probe() {
        let (x, v) = golden_section_max(|x| x, 0.0, 1.0, 0);
        assert!((0.0..=1.0).contains(&x));
        assert_eq!(x, v);
    }
}
