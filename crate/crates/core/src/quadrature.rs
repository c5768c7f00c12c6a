//! Adaptive Simpson integration.

/// `∫_a^b f` to absolute tolerance `tol`. The interval is split into `pieces`
/// panels first so narrow features are not skipped by the initial estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let panel_tol = tol / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == pieces { b } else { lo + h };
            let (flo, fhi, fmid) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, 48)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1, 1e-12);
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn narrow_gaussian() {
        // ∫ N(0, 0.001²) over [-1, 1] is 1 to double precision.
        let s = 1e-3;
        let f = |x: f64| libm::exp(-0.5 * (x / s) * (x / s)) / (s * libm::sqrt(2.0 * core::f64::consts::PI));
        let v = adaptive_simpson(f, -1.0, 1.0, 16, 1e-12);
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}
