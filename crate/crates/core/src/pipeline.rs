//! The end-to-end solves used by the CLI and the acceptance checks: patch
//! eigenvalues with Richardson extrapolation, and the full-grid cross-check.

use serde::Serialize;

use crate::assembly::{
    assemble_fullgrid, assemble_tubular, build_patch_grid, normal_scale, FullGridOptions, PatchGrid, PatchOptions,
    WeightedOperator,
};
use crate::asymptotics::predict_lambda;
use crate::eigensolve::{smallest_nonsym_with, smallest_sym_with, InnerSolver, SolveOptions, SpectralResult};
use crate::error::Result;
use crate::geometry::{BoundaryCurve, MinSite, PatchGeometry, TubularPatch};
use crate::model1d::richardson;

/// Default Dirichlet cut of the full grid, `x_max = x_min + c h^{2/3}`.
pub const DEFAULT_CUT_SCALES: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchSolveOptions {
    pub patch: PatchOptions,
    pub tol: f64,
    /// Also solve on the grid with both spacings halved and extrapolate.
    pub richardson: bool,
    pub inner: InnerSolver,
}

impl Default for PatchSolveOptions {
    fn default() -> Self {
        PatchSolveOptions {
            patch: PatchOptions::default(),
            tol: crate::eigensolve::DEFAULT_TOLERANCE,
            richardson: true,
            inner: InnerSolver::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchSolve {
    pub h: f64,
    pub site: MinSite,
    pub grid: PatchGrid,
    /// Result on `grid`, eigenvectors included.
    pub coarse: SpectralResult,
    /// Eigenvalues on the refined grid.
    pub fine: Option<Vec<f64>>,
    /// Extrapolated eigenvalues (coarse ones without refinement).
    pub eigenvalues: Vec<f64>,
    /// Largest certified residual over both solves.
    pub solver_residual: f64,
}

pub fn patch_operator(patch: &TubularPatch, h: f64, opts: &PatchOptions) -> Result<WeightedOperator> {
    let grid = build_patch_grid(h, patch.kappa0(), patch.bounds(), opts)?;
    assemble_tubular(patch, &grid, h)
}

pub fn solve_patch(patch: &TubularPatch, h: f64, count: usize, opts: &PatchSolveOptions) -> Result<PatchSolve> {
    let sopts = SolveOptions {
        inner: opts.inner,
        shift: None,
    };
    let op = patch_operator(patch, h, &opts.patch)?;
    let coarse = smallest_sym_with(&op, count, opts.tol, &sopts)?;
    let mut residual = coarse.max_residual();
    let (fine, eigenvalues) = if opts.richardson {
        let fop = assemble_tubular(patch, &op.grid.refine(), h)?;
        let f = smallest_sym_with(&fop, count, opts.tol, &sopts)?;
        residual = residual.max(f.max_residual());
        let ex = richardson(&coarse.eigenvalues, &f.eigenvalues);
        (Some(f.eigenvalues), ex)
    } else {
        (None, coarse.eigenvalues.clone())
    };
    Ok(PatchSolve {
        h,
        site: *patch.min_site(),
        grid: op.grid,
        coarse,
        fine,
        eigenvalues,
        solver_residual: residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullGridSolveOptions {
    pub spacing: f64,
    /// Cut position in units of `h^{2/3}` above `x_min`; `None` keeps the
    /// whole domain.
    pub cut_scales: Option<f64>,
    pub tol: f64,
    pub inner: InnerSolver,
}

/// Smallest eigenvalues of the Shortley-Weller operator, shift
/// `prediction - 5 h^{2/3}`.
pub fn solve_fullgrid(
    curve: &BoundaryCurve,
    site: &MinSite,
    h: f64,
    count: usize,
    opts: &FullGridSolveOptions,
) -> Result<SpectralResult> {
    let lt = normal_scale(h);
    let x_max = opts.cut_scales.map(|c| site.x_min + c * lt);
    let op = assemble_fullgrid(
        curve,
        h,
        &FullGridOptions {
            spacing: opts.spacing,
            x_max,
        },
    )?;
    let shift = predict_lambda(1, h, site)?.total - 5.0 * lt;
    smallest_nonsym_with(
        &op,
        count,
        opts.tol,
        &SolveOptions {
            inner: opts.inner,
            shift: Some(shift),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;

    fn disk() -> TubularPatch {
        TubularPatch::new(
            BoundaryCurve::new(CurveSpec::Circle {
                center: [0.0, 0.0],
                radius: 1.0,
            })
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn extrapolation_moves_toward_the_refined_value() {
        let p = disk();
        let r = solve_patch(&p, 0.05, 2, &PatchSolveOptions::default()).unwrap();
        let fine = r.fine.as_ref().unwrap();
        for k in 0..2 {
            let (c, f, e) = (r.coarse.eigenvalues[k], fine[k], r.eigenvalues[k]);
            assert!((e - f).abs() < (f - c).abs());
            assert!((e - f) * (f - c) > 0.0);
        }
        assert!(r.solver_residual <= 1e-10);
    }

    #[test]
    fn fullgrid_agrees_with_patch_on_a_coarse_disk() {
        let p = disk();
        let h = 0.06;
        let r = solve_patch(&p, h, 1, &PatchSolveOptions::default()).unwrap();
        let f = solve_fullgrid(
            p.curve(),
            p.min_site(),
            h,
            1,
            &FullGridSolveOptions {
                spacing: 0.005,
                cut_scales: Some(DEFAULT_CUT_SCALES),
                tol: 1e-10,
                inner: InnerSolver::Auto,
            },
        )
        .unwrap();
        assert!((f.eigenvalues[0] - r.eigenvalues[0]).abs() < 2e-3, "{} vs {}", f.eigenvalues[0], r.eigenvalues[0]);
    }
}
