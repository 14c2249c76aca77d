//! One-dimensional golden-section maximization.

/// `(sqrt(5) - 1) / 2`
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Maximizes a unimodal `f` over the open interior of `[lo, hi]` until the
/// bracket is narrower than `tol`. Endpoints are never evaluated; callers
/// that care about boundary maxima compare them separately.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo <= hi && tol > 0.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        Maximum { x: c, value: fc }
    } else {
        Maximum { x: d, value: fd }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let m = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-9);
        assert!((m.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn boundary_peak_converges_to_edge() {
        let m = golden_section_max(|x| x, 0.0, 2.0, 1e-9);
        assert!((m.x - 2.0).abs() < 1e-8);
        let m = golden_section_max(|x| -x, 0.0, 2.0, 1e-9);
        assert!(m.x.abs() < 1e-8);
    }

    #[test]
    fn degenerate_interval() {
        let m = golden_section_max(|x| x.sin(), 1.0, 1.0, 1e-9);
        assert_eq!(m.x, 1.0);
    }
}
