//! Localization diagnostics of computed eigenvectors: Agmon-weighted norms,
//! exterior mass away from the minimum site, and RMS widths.

use serde::Serialize;

use crate::assembly::WeightedOperator;
use crate::eigensolve::SpectralResult;
use crate::error::{Result, StarkError};

pub const DEFAULT_EPSILON: f64 = 0.15;
pub const MAX_EPSILON: f64 = 0.2;
/// Weight exponents are clipped here to stay finite.
pub const EXPONENT_CLIP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgmonReport {
    pub epsilon: f64,
    /// `int e^{eps t^{3/2}/h} |psi|^2 m / ||psi||_m^2`.
    pub weighted_t_norm: f64,
    /// `int e^{eps s^2/h} |psi|^2 m / ||psi||_m^2`.
    pub weighted_s_norm: f64,
    /// `int e^{eps t^{3/2}/h} |h grad psi|^2 m / (h^{2/3} ||psi||_m^2)`.
    pub gradient_t_norm: f64,
    pub sigma_s: f64,
    pub sigma_t: f64,
    /// Set when some weight exponent exceeded [`EXPONENT_CLIP`].
    pub clipped: bool,
}

/// Density centroid and RMS widths of one grid function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Localization {
    pub centroid_s: f64,
    pub centroid_t: f64,
    pub sigma_s: f64,
    pub sigma_t: f64,
}

fn check_vectors(op: &WeightedOperator, result: &SpectralResult) -> Result<()> {
    for v in &result.eigenvectors {
        op.check_len(v)?;
    }
    Ok(())
}

pub fn localization(op: &WeightedOperator, v: &[f64]) -> Result<Localization> {
    op.check_len(v)?;
    let g = &op.grid;
    let (mut mass, mut ms, mut mt) = (0.0, 0.0, 0.0);
    for (k, x) in v.iter().enumerate() {
        let (i, j) = g.coords(k);
        let w = x * x * op.weight[k];
        mass += w;
        ms += w * g.s(i);
        mt += w * g.t(j);
    }
    if !(mass > 0.0) {
        return Err(StarkError::InvalidArgument("zero vector has no localization".into()));
    }
    let (cs, ct) = (ms / mass, mt / mass);
    let (mut vs, mut vt) = (0.0, 0.0);
    for (k, x) in v.iter().enumerate() {
        let (i, j) = g.coords(k);
        let w = x * x * op.weight[k];
        vs += w * (g.s(i) - cs).powi(2);
        vt += w * (g.t(j) - ct).powi(2);
    }
    Ok(Localization {
        centroid_s: cs,
        centroid_t: ct,
        sigma_s: (vs / mass).sqrt(),
        sigma_t: (vt / mass).sqrt(),
    })
}

/// RMS widths `(sigma_s, sigma_t)` of every eigenvector.
pub fn localization_scales(result: &SpectralResult, op: &WeightedOperator) -> Result<Vec<(f64, f64)>> {
    check_vectors(op, result)?;
    result
        .eigenvectors
        .iter()
        .map(|v| localization(op, v).map(|l| (l.sigma_s, l.sigma_t)))
        .collect()
}

/// Agmon report for a single grid function.
pub fn agmon_report_vector(op: &WeightedOperator, v: &[f64], epsilon: f64) -> Result<AgmonReport> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(StarkError::OutOfRange {
            value: epsilon,
            lo: 0.0,
            hi: MAX_EPSILON,
        });
    }
    op.check_len(v)?;
    let g = &op.grid;
    let h = op.h;
    let mut clipped = false;
    let mut weight = |x: f64| {
        if x > EXPONENT_CLIP {
            clipped = true;
            EXPONENT_CLIP.exp()
        } else {
            x.exp()
        }
    };
    let wt: Vec<f64> = (0..g.nt).map(|j| weight(epsilon * g.t(j).powf(1.5) / h)).collect();
    let ws: Vec<f64> = (0..g.ns).map(|i| weight(epsilon * g.s(i).powi(2) / h)).collect();
    // Dirichlet data: the function is zero one step outside the grid.
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= g.ns as isize || j >= g.nt as isize {
            0.0
        } else {
            v[g.index(i as usize, j as usize)]
        }
    };
    let (mut norm, mut nt, mut ns, mut grad) = (0.0, 0.0, 0.0, 0.0);
    for (k, x) in v.iter().enumerate() {
        let (i, j) = g.coords(k);
        let m = op.weight[k];
        let d = x * x * m;
        norm += d;
        nt += wt[j] * d;
        ns += ws[i] * d;
        let (ii, jj) = (i as isize, j as isize);
        let ds = (at(ii + 1, jj) - at(ii - 1, jj)) / (2.0 * g.ds);
        let dt = (at(ii, jj + 1) - at(ii, jj - 1)) / (2.0 * g.dt);
        grad += wt[j] * h * h * (ds * ds / (m * m) + dt * dt) * m;
    }
    let loc = localization(op, v)?;
    Ok(AgmonReport {
        epsilon,
        weighted_t_norm: nt / norm,
        weighted_s_norm: ns / norm,
        gradient_t_norm: grad / (h.powf(2.0 / 3.0) * norm),
        sigma_s: loc.sigma_s,
        sigma_t: loc.sigma_t,
        clipped,
    })
}

/// One report per eigenvector.
pub fn agmon_report(result: &SpectralResult, op: &WeightedOperator, epsilon: f64) -> Result<Vec<AgmonReport>> {
    check_vectors(op, result)?;
    result
        .eigenvectors
        .iter()
        .map(|v| agmon_report_vector(op, v, epsilon))
        .collect()
}

/// Fraction of `||psi||_m^2` carried by nodes farther than `eta` from `A0`.
pub fn exterior_mass(result: &SpectralResult, op: &WeightedOperator, eta: f64) -> Result<Vec<f64>> {
    check_vectors(op, result)?;
    if !(eta > 0.0) {
        return Err(StarkError::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let far: Vec<bool> = op
        .positions
        .iter()
        .map(|p| (p[0] - op.site[0]).hypot(p[1] - op.site[1]) > eta)
        .collect();
    Ok(result
        .eigenvectors
        .iter()
        .map(|v| {
            let (mut out, mut all) = (0.0, 0.0);
            for ((x, m), f) in v.iter().zip(&op.weight).zip(&far) {
                let d = x * x * m;
                all += d;
                if *f {
                    out += d;
                }
            }
            out / all
        })
        .collect())
}

/// `fraction ~ C e^{-c/h}`: the rate `c` from regressing `ln fraction` on `1/h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r2: f64,
}

pub fn fit_exterior_decay(hs: &[f64], fractions: &[f64]) -> Result<DecayFit> {
    if hs.len() != fractions.len() || hs.len() < 3 {
        return Err(StarkError::InvalidArgument("decay fit needs three or more paired samples".into()));
    }
    if fractions.iter().any(|f| !(*f > 0.0)) || hs.iter().any(|h| !(*h > 0.0)) {
        return Err(StarkError::InvalidArgument("decay fit needs positive samples".into()));
    }
    let x: Vec<f64> = hs.iter().map(|h| 1.0 / h).collect();
    let y: Vec<f64> = fractions.iter().map(|f| f.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    Ok(DecayFit {
        rate: -slope,
        prefactor: icpt.exp(),
        r2: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
    })
}
