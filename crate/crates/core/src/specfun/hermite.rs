use std::f64::consts::PI;

use crate::error::{Result, StarkError};

/// Largest mode index accepted by [`HermiteSpec`].
pub const MAX_HERMITE_INDEX: usize = 60;

/// Mode index `n >= 1` (ground state `n = 1`) and width `alpha = (kappa0/2)^{1/4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSpec {
    n: usize,
    alpha: f64,
}

impl HermiteSpec {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(StarkError::InvalidArgument("mode index starts at 1".into()));
        }
        if n > MAX_HERMITE_INDEX {
            return Err(StarkError::OutOfRange {
                value: n as f64,
                lo: 1.0,
                hi: MAX_HERMITE_INDEX as f64,
            });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(StarkError::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(HermiteSpec { n, alpha })
    }

    /// Width matched to the oscillator `-d^2 + (kappa0/2) sigma^2`.
    pub fn for_curvature(n: usize, kappa0: f64) -> Result<Self> {
        if !(kappa0.is_finite() && kappa0 > 0.0) {
            return Err(StarkError::InvalidArgument(format!(
                "kappa0 must be positive, got {kappa0}"
            )));
        }
        Self::new(n, (0.5 * kappa0).powf(0.25))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// L2-normalized oscillator eigenfunction `f_n(sigma) = sqrt(alpha) psi_{n-1}(alpha sigma)`.
///
/// Uses the normalized recurrence
/// `psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1}`, which never
/// forms `H_k` or `k!` and so cannot overflow.
pub fn hermite_function(spec: HermiteSpec, sigma: f64) -> f64 {
    let x = spec.alpha * sigma;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..spec.n - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    spec.alpha.sqrt() * cur
}

/// Semiclassical mode `f_{n,h}(s) = h^{-1/4} f_n(h^{-1/2} s)` of
/// `-h^2 d^2/ds^2 + (kappa0/2) s^2`, eigenvalue `(2n - 1) h sqrt(kappa0/2)`.
pub fn hermite_mode(n: usize, h: f64, kappa0: f64, s: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(StarkError::InvalidArgument(format!("h must be positive, got {h}")));
    }
    let spec = HermiteSpec::for_curvature(n, kappa0)?;
    Ok(h.powf(-0.25) * hermite_function(spec, s / h.sqrt()))
}
