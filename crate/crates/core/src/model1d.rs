//! Exact and discretized spectra of the one-dimensional model operators
//! `A_h = -h^2 d_t^2 + t` (Dirichlet half-line) and
//! `H_h = -h^2 d_s^2 + kappa0 s^2 / 2`, and of their tensor sum.

use serde::Serialize;

use crate::error::{Result, StarkError};
use crate::specfun::airy_zero;
use crate::specfun::airy::zero_table;

/// Largest spectrum length served by the model operators.
pub const MAX_MODEL_COUNT: usize = 64;

/// Validated `(h, kappa0, count)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpectrumRequest {
    pub h: f64,
    pub kappa0: f64,
    pub count: usize,
}

impl ModelSpectrumRequest {
    pub fn new(h: f64, kappa0: f64, count: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0 && h <= 1.0) {
            return Err(StarkError::InvalidArgument(format!("h must lie in (0, 1], got {h}")));
        }
        if !(kappa0.is_finite() && kappa0 > 0.0) {
            return Err(StarkError::InvalidArgument(format!(
                "kappa0 must be positive, got {kappa0}"
            )));
        }
        if count == 0 || count > MAX_MODEL_COUNT {
            return Err(StarkError::OutOfRange {
                value: count as f64,
                lo: 1.0,
                hi: MAX_MODEL_COUNT as f64,
            });
        }
        Ok(ModelSpectrumRequest { h, kappa0, count })
    }
}

/// `z_n h^{2/3}` for `n = 1..=count`.
pub fn airy_spectrum(h: f64, count: usize) -> Result<Vec<f64>> {
    let req = ModelSpectrumRequest::new(h, 1.0, count)?;
    let scale = req.h.powf(2.0 / 3.0);
    Ok(zero_table()[..req.count].iter().map(|z| z * scale).collect())
}

/// `(2n - 1) h sqrt(kappa0 / 2)` for `n = 1..=count`.
pub fn oscillator_spectrum(h: f64, kappa0: f64, count: usize) -> Result<Vec<f64>> {
    let req = ModelSpectrumRequest::new(h, kappa0, count)?;
    let omega = req.h * (0.5 * req.kappa0).sqrt();
    Ok((1..=count).map(|n| (2 * n - 1) as f64 * omega).collect())
}

/// The `count` smallest values of `z_j h^{2/3} + (2k - 1) h sqrt(kappa0/2)`.
///
/// Both factor spectra are increasing, so the `count` smallest sums use
/// indices `j, k <= count` and the full 64 x 64 grid always covers them.
pub fn tensor_spectrum(req: ModelSpectrumRequest) -> Result<Vec<f64>> {
    let airy = airy_spectrum(req.h, MAX_MODEL_COUNT)?;
    let osc = oscillator_spectrum(req.h, req.kappa0, MAX_MODEL_COUNT)?;
    let mut sums: Vec<f64> = airy
        .iter()
        .flat_map(|a| osc.iter().map(move |o| a + o))
        .collect();
    sums.sort_by(f64::total_cmp);
    sums.truncate(req.count);
    Ok(sums)
}

/// Closed form `z_1 h^{2/3} + (2n - 1) h sqrt(kappa0/2)`, valid below the
/// crossover with the second transverse branch.
pub fn tensor_closed_form(req: ModelSpectrumRequest) -> Result<Vec<f64>> {
    let z1 = airy_zero(1)? * req.h.powf(2.0 / 3.0);
    Ok(oscillator_spectrum(req.h, req.kappa0, req.count)?
        .into_iter()
        .map(|o| z1 + o)
        .collect())
}

/// Whether `count * 2h sqrt(kappa0/2) < (z_2 - z_1) h^{2/3}`.
pub fn below_crossover(req: ModelSpectrumRequest) -> Result<bool> {
    let gap = (airy_zero(2)? - airy_zero(1)?) * req.h.powf(2.0 / 3.0);
    Ok(req.count as f64 * 2.0 * req.h * (0.5 * req.kappa0).sqrt() < gap)
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `count` smallest eigenvalues by bisection to full precision.
    pub fn smallest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let count = count.min(self.diag.len());
        let (lo0, hi0) = self.bounds();
        (0..count)
            .map(|k| {
                let (mut lo, mut hi) = (lo0, hi0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }
}

fn uniform_dirichlet(h: f64, step: f64, nodes: &[f64], potential: impl Fn(f64) -> f64) -> Tridiagonal {
    let c = h * h / (step * step);
    Tridiagonal {
        diag: nodes.iter().map(|&x| 2.0 * c + potential(x)).collect(),
        off: vec![-c; nodes.len().saturating_sub(1)],
    }
}

/// Lowest `count` eigenvalues of the three-point Dirichlet discretization of
/// `A_h` on `(0, T)` with `n` interior nodes, `dt = T / (n + 1)` as close to
/// the requested `dt` as an integer node count allows.
pub fn discretize_airy_halfline(h: f64, t_max: f64, dt: f64, count: usize) -> Result<Vec<f64>> {
    let scale = h.powf(2.0 / 3.0);
    if !(h > 0.0 && t_max.is_finite() && dt > 0.0) {
        return Err(StarkError::InvalidArgument("h, T and dt must be positive".into()));
    }
    if t_max < 14.0 * scale {
        return Err(StarkError::Resolution(format!(
            "T = {t_max} is below 14 h^(2/3) = {}",
            14.0 * scale
        )));
    }
    if dt > scale / 20.0 * (1.0 + 1e-12) {
        return Err(StarkError::Resolution(format!(
            "dt = {dt} exceeds h^(2/3) / 20 = {}",
            scale / 20.0
        )));
    }
    let n = (t_max / dt).round() as usize - 1;
    let step = t_max / (n + 1) as f64;
    let nodes: Vec<f64> = (1..=n).map(|j| j as f64 * step).collect();
    Ok(uniform_dirichlet(h, step, &nodes, |t| t).smallest_eigenvalues(count))
}

/// Lowest `count` eigenvalues of the Dirichlet discretization of `H_h` on
/// `(-S, S)` with spacing close to `ds`.
pub fn discretize_oscillator(h: f64, kappa0: f64, half: f64, ds: f64, count: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && kappa0 > 0.0 && half.is_finite() && ds > 0.0) {
        return Err(StarkError::InvalidArgument("h, kappa0, S and ds must be positive".into()));
    }
    let width = h.sqrt() * (2.0 / kappa0).powf(0.25);
    if half < 10.0 * width {
        return Err(StarkError::Resolution(format!(
            "S = {half} is below 10 h^(1/2) (2/kappa0)^(1/4) = {}",
            10.0 * width
        )));
    }
    if ds > width / 20.0 * (1.0 + 1e-12) {
        return Err(StarkError::Resolution(format!(
            "ds = {ds} exceeds h^(1/2) (2/kappa0)^(1/4) / 20 = {}",
            width / 20.0
        )));
    }
    let n = (2.0 * half / ds).round() as usize - 1;
    let step = 2.0 * half / (n + 1) as f64;
    let nodes: Vec<f64> = (1..=n).map(|j| -half + j as f64 * step).collect();
    Ok(uniform_dirichlet(h, step, &nodes, |s| 0.5 * kappa0 * s * s).smallest_eigenvalues(count))
}

/// Second-order Richardson combination `(4 fine - coarse) / 3`, entrywise.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect()
}
