//! One-dimensional quadrature shared by the geometry and the test oracles.

/// Adaptive Simpson quadrature with a Richardson-corrected acceptance test.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
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
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integral over `[a, inf)` of a function with super-exponential or
/// Gaussian decay, accumulated over unit panels until they stop contributing.
pub fn integrate_decaying<F: Fn(f64) -> f64>(f: &F, a: f64, panel: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    loop {
        let part = adaptive_simpson(f, lo, lo + panel, tol);
        total += part;
        lo += panel;
        if part.abs() <= 1e-3 * tol && lo - a > 4.0 * panel {
            return total;
        }
    }
}
