//! Smallest eigenpairs of the weighted patch pencil and of the full-grid
//! operator, by shift-invert Krylov iterations.

mod arnoldi;
mod krylov;
mod lanczos;

pub use arnoldi::smallest_nonsym_with;
pub use krylov::{bicgstab, conjugate_gradient};
pub use lanczos::smallest_sym_with;

use serde::{Deserialize, Serialize};

use crate::assembly::{FullGridOperator, WeightedOperator};
use crate::error::{Result, StarkError};
use crate::sparse::norm;

pub const MAX_EIGENPAIRS: usize = 32;
pub const MIN_TOLERANCE: f64 = 1e-11;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// How the shifted systems inside the Krylov loop are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerSolver {
    /// Banded direct factorization when its storage stays below
    /// [`DIRECT_MEMORY_LIMIT`] bytes, the iterative method otherwise.
    #[default]
    Auto,
    Direct,
    Iterative,
}

pub const DIRECT_MEMORY_LIMIT: usize = 2_200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub inner: InnerSolver,
    /// Overrides the default shift.
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Weighted-orthonormal eigenvectors on the operator's unknowns.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `||A v - lambda D v|| / ||D v||` for each pair.
    pub residuals: Vec<f64>,
    /// Krylov steps (one shifted solve each).
    pub iterations: usize,
    /// Total inner iterations, zero for direct solves.
    pub inner_iterations: usize,
    pub shift: f64,
    pub grid_id: String,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn check_request(count: usize, tol: f64) -> Result<()> {
    if count == 0 || count > MAX_EIGENPAIRS {
        return Err(StarkError::OutOfRange {
            value: count as f64,
            lo: 1.0,
            hi: MAX_EIGENPAIRS as f64,
        });
    }
    if !(tol >= MIN_TOLERANCE) {
        return Err(StarkError::InvalidArgument(format!("tolerance {tol} below {MIN_TOLERANCE}")));
    }
    Ok(())
}

fn iteration_cap(count: usize, size: usize) -> usize {
    (10.0 * count as f64 * (size as f64).sqrt()).ceil() as usize
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
pub(crate) fn normalize_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = k;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The `count` smallest eigenpairs of `stiffness v = lambda diag(weight) v`,
/// shift `x_min - h^(2/3)`.
pub fn smallest_sym(op: &WeightedOperator, count: usize, tol: f64) -> Result<SpectralResult> {
    smallest_sym_with(op, count, tol, &SolveOptions::default())
}

/// The `count` smallest eigenvalues of the full-grid operator, shift `shift`.
pub fn smallest_nonsym(op: &FullGridOperator, count: usize, tol: f64, shift: f64) -> Result<SpectralResult> {
    smallest_nonsym_with(
        op,
        count,
        tol,
        &SolveOptions {
            shift: Some(shift),
            ..SolveOptions::default()
        },
    )
}

/// `||K v - lambda D v|| / ||D v||`.
pub fn sym_residual(op: &WeightedOperator, lambda: f64, v: &[f64]) -> f64 {
    let kv = op.stiffness.mul(v);
    let dv: Vec<f64> = v.iter().zip(&op.weight).map(|(a, m)| a * m).collect();
    let r: Vec<f64> = kv.iter().zip(&dv).map(|(a, b)| a - lambda * b).collect();
    norm(&r) / norm(&dv)
}

/// `||A v - lambda v|| / ||v||`.
pub fn nonsym_residual(op: &FullGridOperator, lambda: f64, v: &[f64]) -> f64 {
    let av = op.matrix.mul(v);
    let r: Vec<f64> = av.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
    norm(&r) / norm(v)
}

/// Recomputes the residual certificate of every pair in `result`.
pub fn recompute_residuals(op: &WeightedOperator, result: &SpectralResult) -> Result<Vec<f64>> {
    result
        .eigenvalues
        .iter()
        .zip(&result.eigenvectors)
        .map(|(&l, v)| {
            op.check_len(v)?;
            Ok(sym_residual(op, l, v))
        })
        .collect()
}

#[cfg(test)]
mod tests;
