//! The three-term eigenvalue expansion, its physical-unit form, and power-law
//! fits of the remainder.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StarkError};
use crate::geometry::MinSite;
use crate::specfun::airy_zero;

/// Physical parameters of `-(hbar^2 / 2m) Laplacian + q F x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    pub field: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let qf = self.charge * self.field;
        if !(qf > 0.0) {
            return Err(StarkError::NonPositiveField(qf));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) || !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(StarkError::InvalidArgument("hbar and mass must be positive".into()));
        }
        Ok(())
    }

    pub fn qf(&self) -> f64 {
        self.charge * self.field
    }
}

/// `h = hbar / sqrt(2 m q F)`.
pub fn h_from_physical(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    Ok(p.hbar / (2.0 * p.mass * p.qf()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionPrediction {
    pub n: usize,
    pub h: f64,
    pub x_min: f64,
    pub kappa0: f64,
    /// `x_min`.
    pub t0: f64,
    /// `z_1 h^{2/3}`.
    pub t1: f64,
    /// `(2n - 1) h sqrt(kappa0 / 2)`.
    pub t2: f64,
    pub total: f64,
    /// `h^{4/3}`.
    pub remainder_scale: f64,
}

fn check_mode(n: usize, kappa0: f64) -> Result<()> {
    if n == 0 {
        return Err(StarkError::InvalidArgument("mode index starts at 1".into()));
    }
    if !(kappa0 > 0.0) {
        return Err(StarkError::NonPositiveCurvature { kappa: kappa0 });
    }
    Ok(())
}

pub fn predict_lambda(n: usize, h: f64, site: &MinSite) -> Result<ExpansionPrediction> {
    check_mode(n, site.kappa0)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(StarkError::InvalidArgument(format!("h must be positive, got {h}")));
    }
    let z1 = airy_zero(1)?;
    let t0 = site.x_min;
    let t1 = z1 * h.powf(2.0 / 3.0);
    let t2 = (2 * n - 1) as f64 * h * (0.5 * site.kappa0).sqrt();
    Ok(ExpansionPrediction {
        n,
        h,
        x_min: site.x_min,
        kappa0: site.kappa0,
        t0,
        t1,
        t2,
        total: t0 + t1 + t2,
        remainder_scale: h.powf(4.0 / 3.0),
    })
}

/// Per-term physical energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyPrediction {
    /// `q F x_min`.
    pub e0: f64,
    /// `((q F hbar)^2 / 2m)^{1/3} z_1`.
    pub e1: f64,
    /// `(n - 1/2) hbar sqrt(q F kappa0 / m)`.
    pub e2: f64,
    pub total: f64,
}

pub fn energy_terms(n: usize, p: &PhysicalParams, site: &MinSite) -> Result<EnergyPrediction> {
    p.validate()?;
    check_mode(n, site.kappa0)?;
    let qf = p.qf();
    let z1 = airy_zero(1)?;
    let e0 = qf * site.x_min;
    let e1 = ((qf * p.hbar).powi(2) / (2.0 * p.mass)).cbrt() * z1;
    let e2 = (n as f64 - 0.5) * p.hbar * (qf * site.kappa0 / p.mass).sqrt();
    Ok(EnergyPrediction {
        e0,
        e1,
        e2,
        total: e0 + e1 + e2,
    })
}

/// Three-term physical energy of the `n`-th level.
pub fn predict_energy(n: usize, p: &PhysicalParams, site: &MinSite) -> Result<f64> {
    Ok(energy_terms(n, p, site)?.total)
}

/// `y = C x^p` fitted by least squares in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
    /// Points that entered the fit.
    pub kept: usize,
}

/// Log-log least squares over strictly positive samples.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(StarkError::InvalidArgument("power-law fit needs two or more paired samples".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(StarkError::InvalidArgument("power-law fit needs positive samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StarkError::InvalidArgument("power-law fit needs distinct abscissae".into()));
    }
    let p = sxy / sxx;
    let c = my - p * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - c - p * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerFit {
        exponent: p,
        prefactor: c.exp(),
        r2,
        kept: xs.len(),
    })
}

/// Remainder exponent from `|lambda_numeric - prediction|` over an `h`
/// sweep. Residuals below `10 * solver_tol` are dropped as noise.
pub fn fit_remainder(hs: &[f64], residuals: &[f64], solver_tol: f64) -> Result<PowerFit> {
    if hs.len() != residuals.len() {
        return Err(StarkError::InvalidArgument("hs and residuals differ in length".into()));
    }
    if hs.len() < 4 {
        return Err(StarkError::InvalidArgument(format!("need at least 4 h values, got {}", hs.len())));
    }
    let (lo, hi) = hs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(StarkError::InvalidArgument(format!("h values must span a decade, got [{lo}, {hi}]")));
    }
    let floor = 10.0 * solver_tol;
    let (xs, ys): (Vec<f64>, Vec<f64>) = hs
        .iter()
        .zip(residuals)
        .filter(|(_, r)| r.abs() >= floor)
        .map(|(h, r)| (*h, r.abs()))
        .unzip();
    if xs.len() < 3 {
        return Err(StarkError::ResidualBelowNoise { kept: xs.len() });
    }
    power_law_fit(&xs, &ys)
}
