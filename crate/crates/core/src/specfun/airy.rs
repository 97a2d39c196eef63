use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Result, StarkError};

/// Supported argument range of [`airy_ai`].
pub const AIRY_RANGE: (f64, f64) = (-20.0, 40.0);
/// Largest zero index served by [`airy_zero`].
pub const AIRY_ZERO_MAX: usize = 50;

const SERIES_LIMIT: f64 = 4.5;
/// On `x > 0` the series cancels towards `Ai ~ e^{-zeta}`, so the stable
/// backward march takes over earlier.
const SERIES_LIMIT_POSITIVE: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 9.0;
const MARCH_STEP: f64 = 0.25;

/// `Ai(0)` and `-Ai'(0)`.
const AI0: f64 = 0.355_028_053_887_817_239_26;
const AIP0: f64 = 0.258_819_403_792_806_798_41;

/// Standard Airy function and its derivative at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub ai: f64,
    pub aip: f64,
}

/// `Ai(x)` and `Ai'(x)` for `x` in [`AIRY_RANGE`].
///
/// Maclaurin series on `-4.5 <= x <= 2`, Poincare asymptotics on `|x| >= 9`
/// and a high-order Taylor march of `y'' = x y` from the asymptotic anchor in
/// between.
pub fn airy_ai(x: f64) -> Result<AiryValue> {
    let (lo, hi) = AIRY_RANGE;
    if !(lo..=hi).contains(&x) {
        return Err(StarkError::OutOfRange { value: x, lo, hi });
    }
    Ok(airy_unchecked(x))
}

pub(crate) fn airy_unchecked(x: f64) -> AiryValue {
    if (-SERIES_LIMIT..=SERIES_LIMIT_POSITIVE).contains(&x) {
        maclaurin(x)
    } else if x >= ASYMPTOTIC_LIMIT {
        asymptotic_positive(x)
    } else if x <= -ASYMPTOTIC_LIMIT {
        asymptotic_negative(-x)
    } else if x > 0.0 {
        march(ASYMPTOTIC_LIMIT, asymptotic_positive(ASYMPTOTIC_LIMIT), x)
    } else {
        march(-ASYMPTOTIC_LIMIT, asymptotic_negative(ASYMPTOTIC_LIMIT), x)
    }
}

fn maclaurin(x: f64) -> AiryValue {
    let x3 = x * x * x;
    // f = sum c_k x^{3k}, g = sum e_k x^{3k+1}; Ai = Ai(0) f + Ai'(0) g
    let (mut f, mut fp) = (1.0, 0.0);
    let (mut g, mut gp) = (x, 1.0);
    let (mut tf, mut tfp) = (1.0, 0.5 * x * x);
    let (mut tg, mut tgp) = (x, 1.0);
    for k in 1..60 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        if k >= 2 {
            tfp *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf - 3.0));
        }
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tgp *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        f += tf;
        fp += tfp;
        g += tg;
        gp += tgp;
        let tail = tf.abs() + tfp.abs() + tg.abs() + tgp.abs();
        if tail <= 1e-18 * (f.abs() + g.abs() + fp.abs() + gp.abs()) {
            break;
        }
    }
    AiryValue {
        ai: AI0 * f - AIP0 * g,
        aip: AI0 * fp - AIP0 * gp,
    }
}

/// Coefficients `u_k` of the Airy asymptotic expansion.
fn u_coefficients() -> &'static [f64] {
    static U: OnceLock<Vec<f64>> = OnceLock::new();
    U.get_or_init(|| {
        let mut u = vec![1.0];
        for k in 1..60usize {
            let kf = k as f64;
            let prev = u[k - 1];
            u.push(
                prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                    / ((2.0 * kf - 1.0) * 216.0 * kf),
            );
        }
        u
    })
}

fn v_coefficient(k: usize) -> f64 {
    let kf = k as f64;
    if k == 0 {
        1.0
    } else {
        -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u_coefficients()[k]
    }
}

/// `sum_k sign(k) c_k zeta^{-k}` truncated at the smallest term.
fn optimal_sum(zeta: f64, coeff: impl Fn(usize) -> f64, ks: impl Iterator<Item = (usize, f64)>) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (k, sign) in ks {
        let term = sign * coeff(k) * zeta.powi(-(k as i32));
        if term.abs() > last {
            break;
        }
        sum += term;
        last = term.abs();
        if last <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn alternating(start: usize, step: usize) -> impl Iterator<Item = (usize, f64)> {
    (0..29).map(move |j| (start + step * j, if j % 2 == 0 { 1.0 } else { -1.0 }))
}

fn asymptotic_positive(x: f64) -> AiryValue {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let u = u_coefficients();
    let su = optimal_sum(zeta, |k| u[k], alternating(0, 1));
    let sv = optimal_sum(zeta, v_coefficient, alternating(0, 1));
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    AiryValue {
        ai: e / q * su,
        aip: -e * q * sv,
    }
}

/// Oscillatory asymptotics for `Ai(-z)`, `z > 0`.
fn asymptotic_negative(z: f64) -> AiryValue {
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let u = u_coefficients();
    let p = optimal_sum(zeta, |k| u[k], alternating(0, 2));
    let q = optimal_sum(zeta, |k| u[k], alternating(1, 2));
    let r = optimal_sum(zeta, v_coefficient, alternating(0, 2));
    let s = optimal_sum(zeta, v_coefficient, alternating(1, 2));
    let (sn, cs) = (zeta - 0.25 * PI).sin_cos();
    let w = z.powf(0.25);
    AiryValue {
        ai: (cs * p + sn * q) / (PI.sqrt() * w),
        aip: w * (sn * r - cs * s) / PI.sqrt(),
    }
}

/// Taylor integration of `y'' = x y` from `x0` to `x1`.
fn march(x0: f64, start: AiryValue, x1: f64) -> AiryValue {
    let steps = ((x1 - x0).abs() / MARCH_STEP).ceil().max(1.0) as usize;
    let dx = (x1 - x0) / steps as f64;
    let (mut y, mut yp) = (start.ai, start.aip);
    for k in 0..steps {
        let xc = x0 + k as f64 * dx;
        // a_{n+2} = (xc a_n + a_{n-1}) / ((n + 2)(n + 1))
        let (mut am1, mut a0, mut a1) = (0.0, y, yp);
        let (mut sy, mut syp) = (a0 + a1 * dx, a1);
        let mut pw = dx;
        for n in 0..60 {
            let a2 = (xc * a0 + am1) / ((n as f64 + 2.0) * (n as f64 + 1.0));
            let dpw = pw;
            pw *= dx;
            let ty = a2 * pw;
            let typ = (n as f64 + 2.0) * a2 * dpw;
            sy += ty;
            syp += typ;
            am1 = a0;
            a0 = a1;
            a1 = a2;
            if n > 4 && ty.abs() + typ.abs() <= 1e-18 * (sy.abs() + syp.abs()) {
                break;
            }
        }
        y = sy;
        yp = syp;
    }
    AiryValue { ai: y, aip: yp }
}

/// Magnitude of the `n`-th zero of `Ai`, `Ai(-z_n) = 0`, for `1 <= n <= 50`.
pub fn airy_zero(n: usize) -> Result<f64> {
    if !(1..=AIRY_ZERO_MAX).contains(&n) {
        return Err(StarkError::OutOfRange {
            value: n as f64,
            lo: 1.0,
            hi: AIRY_ZERO_MAX as f64,
        });
    }
    Ok(zero_table()[n - 1])
}

/// Zeros past the public limit, as needed by the 64-term model spectra.
pub(crate) const AIRY_ZERO_TABLE: usize = 64;

pub(crate) fn zero_table() -> &'static [f64] {
    static ZEROS: OnceLock<Vec<f64>> = OnceLock::new();
    ZEROS.get_or_init(|| (1..=AIRY_ZERO_TABLE).map(compute_zero).collect())
}

fn compute_zero(n: usize) -> f64 {
    let t = 3.0 * PI * (4.0 * n as f64 - 1.0) / 8.0;
    let guess = t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 * t.powi(-2) - 5.0 / 36.0 * t.powi(-4));
    let f = |z: f64| airy_unchecked(-z).ai;
    let (mut lo, mut hi) = (guess - 0.1, guess + 0.1);
    while f(lo) * f(hi) > 0.0 {
        lo -= 0.05;
        hi += 0.05;
    }
    let mut z = guess.clamp(lo, hi);
    for _ in 0..200 {
        let v = airy_unchecked(-z);
        if v.ai == 0.0 {
            return z;
        }
        if v.ai * f(lo) < 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        // d/dz Ai(-z) = -Ai'(-z)
        let newton = z + v.ai / v.aip;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - z).abs() <= 2.0 * f64::EPSILON * z {
            return next;
        }
        z = next;
    }
    z
}

/// `|Ai'(-z_1)|`, the L2 norm of `Ai(. - z_1)` on the half-line.
pub fn airy_mode_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        let z1 = airy_zero(1).expect("first zero is in range");
        airy_unchecked(-z1).aip.abs()
    })
}

/// Normalized half-line Airy mode `a_h(t) = h^{-1/3} Ai(h^{-2/3} t - z_1) / N`.
///
/// Vanishes at `t = 0`, is extended by zero for `t < 0` and returns zero once
/// the argument exceeds the supported Airy range (where `Ai < 1e-74`).
pub fn airy_mode(h: f64, t: f64) -> f64 {
    assert!(h > 0.0, "airy_mode needs h > 0, got {h}");
    if t <= 0.0 {
        return 0.0;
    }
    let z1 = airy_zero(1).expect("first zero is in range");
    let x = t * h.powf(-2.0 / 3.0) - z1;
    if x > AIRY_RANGE.1 {
        return 0.0;
    }
    airy_unchecked(x).ai / (h.cbrt() * airy_mode_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use rand::{Rng, SeedableRng};

    /// (x, Ai, Ai') at 30 significant digits from an arbitrary-precision library.
    const REFERENCE: &[(f64, f64, f64)] = &[
        (-20.0, -0.17640612707798468959, 0.8928628567364712384),
        (-15.0, 0.27821749087082892953, 0.27237420430864202083),
        (-10.0, 0.040241238486443190689, 0.9962650441327900559),
        (-9.0, -0.022133721547341403674, -0.97566398092633159471),
        (-7.0, 0.18428083525050563728, -0.77100816841012654773),
        (-5.0, 0.35076100902411431979, 0.32719281855444313679),
        (-4.5, 0.29215278105595946688, -0.52336253231574770071),
        (-2.0, 0.22740742820168557599, 0.61825902074169104141),
        (0.0, 0.35502805388781723926, -0.25881940379280679841),
        (1.0, 0.13529241631288141552, -0.15914744129679321279),
        (2.0, 0.034924130423274379135, -0.053090384433653631704),
        (4.5, 0.00033025032351430898366, -0.00071786656755750888869),
        (6.0, 9.9476943602528895702e-6, -0.000024765200397034954754),
        (9.0, 2.4711684308724898433e-9, -7.4806413896589464128e-9),
        (15.0, 2.164962520737992299e-18, -8.4205679540177727661e-18),
        (25.0, 8.1160268246913866838e-38, -4.0660893372432810053e-37),
        (40.0, 6.3657426585529149096e-75, -4.0300179776006780423e-74),
    ];

    /// Plain 60-term Maclaurin sum with coefficients from exact recurrences.
    fn series_oracle(x: f64) -> f64 {
        let mut c = 1.0;
        let mut e = 1.0;
        let (mut f, mut g) = (0.0, 0.0);
        for k in 0..60 {
            let kf = k as f64;
            f += c * x.powi(3 * k);
            g += e * x.powi(3 * k + 1);
            c /= (3.0 * kf + 2.0) * (3.0 * kf + 3.0);
            e /= (3.0 * kf + 3.0) * (3.0 * kf + 4.0);
        }
        AI0 * f - AIP0 * g
    }

    #[test]
    fn reference_values() {
        for &(x, ai, aip) in REFERENCE {
            let v = airy_ai(x).unwrap();
            let tol = if x >= -10.0 { 1e-12 } else { 1e-11 };
            assert!((v.ai - ai).abs() <= tol, "Ai({x}) = {} vs {ai}", v.ai);
            assert!((v.aip - aip).abs() <= 10.0 * tol, "Ai'({x}) = {} vs {aip}", v.aip);
            if x > 4.0 {
                assert!((v.ai / ai - 1.0).abs() < 1e-11, "relative Ai({x})");
            }
        }
    }

    #[test]
    fn values_at_zero_and_one() {
        let v = airy_ai(0.0).unwrap();
        assert!((v.ai - 0.3550280539).abs() < 1e-10);
        assert!((v.aip + 0.2588194038).abs() < 1e-10);
        assert!((airy_ai(1.0).unwrap().ai - 0.1352924163).abs() < 1e-10);
        for x in [0.0, 1.0, -1.5, 3.0] {
            assert!((airy_ai(x).unwrap().ai - series_oracle(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(matches!(airy_ai(-20.5), Err(StarkError::OutOfRange { .. })));
        assert!(matches!(airy_ai(41.0), Err(StarkError::OutOfRange { .. })));
        assert!(airy_ai(f64::NAN).is_err());
        assert!(airy_zero(0).is_err());
        assert!(airy_zero(51).is_err());
    }

    #[test]
    fn branches_agree_at_switchover() {
        for x in [SERIES_LIMIT, -SERIES_LIMIT] {
            let s = maclaurin(x);
            let m = if x > 0.0 {
                march(ASYMPTOTIC_LIMIT, asymptotic_positive(ASYMPTOTIC_LIMIT), x)
            } else {
                march(-ASYMPTOTIC_LIMIT, asymptotic_negative(ASYMPTOTIC_LIMIT), x)
            };
            assert!((s.ai - m.ai).abs() < 1e-11, "{x}: {} vs {}", s.ai, m.ai);
            assert!((s.aip - m.aip).abs() < 1e-11);
        }
        // forward marching is only stable on the oscillatory side
        let a = asymptotic_negative(ASYMPTOTIC_LIMIT);
        let m = march(-SERIES_LIMIT, maclaurin(-SERIES_LIMIT), -ASYMPTOTIC_LIMIT);
        assert!((a.ai - m.ai).abs() < 1e-11 && (a.aip - m.aip).abs() < 1e-11);
        let x = SERIES_LIMIT_POSITIVE;
        let m = march(ASYMPTOTIC_LIMIT, asymptotic_positive(ASYMPTOTIC_LIMIT), x);
        assert!((maclaurin(x).ai / m.ai - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ode_residual_on_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let e = 1e-5;
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let ai = airy_ai(x).unwrap().ai;
            let d2 = (airy_ai(x + e).unwrap().aip - airy_ai(x - e).unwrap().aip) / (2.0 * e);
            assert!(
                (d2 - x * ai).abs() <= 1e-9 * (1.0 + (x * ai).abs()),
                "residual at {x}: {}",
                d2 - x * ai
            );
        }
    }

    #[test]
    fn zeros() {
        let z1 = airy_zero(1).unwrap();
        assert!((z1 - 2.33810741).abs() < 1e-7);
        assert!((z1 - 2.3381074104597670385).abs() < 1e-13);
        assert!((airy_zero(2).unwrap() - 4.08794944).abs() < 1e-8);
        assert!((airy_zero(3).unwrap() - 5.5205598280955510591).abs() < 1e-12);
        assert!((airy_zero(10).unwrap() - 12.8287767528657572).abs() < 1e-11);
        assert!((airy_zero(50).unwrap() - 38.021008677255254433).abs() < 1e-10);
        assert!(airy_ai(-2.33810741).unwrap().ai.abs() <= 1e-8);
        for n in 1..AIRY_ZERO_MAX {
            assert!(airy_zero(n + 1).unwrap() > airy_zero(n).unwrap());
        }
        let table = zero_table();
        assert!((table[63] - 44.855398068145832426).abs() < 1e-9);
        assert!(table.windows(2).all(|w| w[1] - w[0] > 0.4));
        for n in 1..=10 {
            let z = airy_zero(n).unwrap();
            assert!(airy_ai(-z).unwrap().ai.abs() <= 1e-13);
        }
    }

    #[test]
    fn mode_norm_constant() {
        assert!((airy_mode_norm() - 0.70121082272069136249).abs() < 1e-12);
    }

    #[test]
    fn mode_vanishes_at_boundary() {
        for h in [0.1, 0.01, 0.001] {
            assert!(airy_mode(h, 0.0).abs() < 1e-13);
            assert!(airy_mode(h, 1e-14).abs() < 1e-8);
        }
    }

    #[test]
    fn mode_normalization() {
        for h in [0.1, 0.05, 0.02, 0.01, 0.005] {
            let f = |t: f64| airy_mode(h, t).powi(2);
            let scale = h.powf(2.0 / 3.0);
            let mut total = 0.0;
            let mut lo = 0.0;
            while lo < 60.0 * scale {
                total += adaptive_simpson(&f, lo, lo + scale, 1e-13);
                lo += scale;
            }
            assert!((total - 1.0).abs() < 1e-8, "h = {h}: {total}");
        }
    }

    #[test]
    fn mode_eigen_residual() {
        let h: f64 = 0.05;
        let z1 = airy_zero(1).unwrap();
        let lam = z1 * h.powf(2.0 / 3.0);
        let d = 1e-4;
        let mut worst: f64 = 0.0;
        for k in 1..2000 {
            let t = k as f64 * 1e-3;
            let (am, a0, ap) = (airy_mode(h, t - d), airy_mode(h, t), airy_mode(h, t + d));
            let r = -h * h * (ap - 2.0 * a0 + am) / (d * d) + (t - lam) * a0;
            worst = worst.max(r.abs());
        }
        assert!(worst <= 1e-6, "worst residual {worst}");
    }
}
