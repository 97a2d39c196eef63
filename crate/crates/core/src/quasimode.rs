//! Airy-times-Hermite test functions with a smooth cutoff, their quadratic
//! form on the discrete patch operator, and the generalized Ritz values of
//! the quasimode block.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::assembly::{tangential_scale, PatchGrid, PatchOptions, WeightedOperator};
use crate::asymptotics::{power_law_fit, PowerFit};
use crate::error::{Result, StarkError};
use crate::specfun::{airy_mode, hermite_mode};

pub const DEFAULT_THETA: f64 = 0.1;
/// Multiplier on both cutoff scales `h^{1/2 - theta}` and `h^{2/3 - theta}`.
pub const DEFAULT_CUTOFF_SCALE: f64 = 2.5;
pub const CUTOFF_PROFILE: &str = "quintic-smoothstep";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffOptions {
    pub theta: f64,
    pub scale: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions {
            theta: DEFAULT_THETA,
            scale: DEFAULT_CUTOFF_SCALE,
        }
    }
}

impl CutoffOptions {
    /// Plateau half-lengths `(l_s, l_t)`; the cutoff vanishes beyond `1.5 l`.
    pub fn plateaus(&self, h: f64) -> (f64, f64) {
        (
            self.scale * h.powf(0.5 - self.theta),
            self.scale * h.powf(2.0 / 3.0 - self.theta),
        )
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0 / 3.0) {
            return Err(StarkError::InvalidArgument(format!(
                "theta must lie in (0, 1/3), got {}",
                self.theta
            )));
        }
        if !(self.scale > 0.0) {
            return Err(StarkError::InvalidArgument("cutoff scale must be positive".into()));
        }
        Ok(())
    }
}

/// Patch options whose half-width holds the cutoff support with 5% spare.
pub fn quasimode_patch_options(h: f64, kappa0: f64, cutoff: &CutoffOptions) -> PatchOptions {
    let (ls, _) = cutoff.plateaus(h);
    let need = 1.05 * 1.5 * ls / tangential_scale(h, kappa0);
    let base = PatchOptions::default();
    PatchOptions {
        s_scales: base.s_scales.max(need),
        ..base
    }
}

fn smoothstep5(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

/// Equals 1 on `|u| <= l`, 0 on `|u| >= 1.5 l`.
fn plateau(u: f64, l: f64) -> f64 {
    1.0 - smoothstep5((u.abs() - l) / (0.5 * l))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quasimode {
    pub n: usize,
    pub h: f64,
    pub kappa0: f64,
    pub cutoff: CutoffOptions,
    pub profile: &'static str,
    pub grid: PatchGrid,
    /// Samples at the grid unknowns.
    pub values: Vec<f64>,
}

impl Quasimode {
    /// `chi(s, t) f_{n,h}(s) a_h(t)` at an arbitrary point.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let (ls, lt) = self.cutoff.plateaus(self.h);
        let chi = plateau(s, ls) * plateau(t, lt);
        if chi == 0.0 {
            return 0.0;
        }
        let f = hermite_mode(self.n, self.h, self.kappa0, s).expect("validated at construction");
        chi * f * airy_mode(self.h, t)
    }

    /// Unweighted `int |phi|^2 ds dt` by the grid rule.
    pub fn flat_norm_sq(&self) -> f64 {
        self.grid.ds * self.grid.dt * self.values.iter().map(|v| v * v).sum::<f64>()
    }
}

pub fn build_quasimode(n: usize, h: f64, kappa0: f64, grid: &PatchGrid, theta: f64) -> Result<Quasimode> {
    build_quasimode_with(
        n,
        h,
        kappa0,
        grid,
        &CutoffOptions {
            theta,
            ..CutoffOptions::default()
        },
    )
}

pub fn build_quasimode_with(n: usize, h: f64, kappa0: f64, grid: &PatchGrid, cutoff: &CutoffOptions) -> Result<Quasimode> {
    cutoff.validate()?;
    if !(h > 0.0) {
        return Err(StarkError::InvalidArgument(format!("h must be positive, got {h}")));
    }
    hermite_mode(n, h, kappa0, 0.0)?;
    let (ls, lt) = cutoff.plateaus(h);
    if 1.5 * ls > grid.half_width {
        return Err(StarkError::ScaleOverflow {
            scale: 1.5 * ls,
            extent: grid.half_width,
        });
    }
    if 1.5 * lt > grid.depth {
        return Err(StarkError::ScaleOverflow {
            scale: 1.5 * lt,
            extent: grid.depth,
        });
    }
    let mut q = Quasimode {
        n,
        h,
        kappa0,
        cutoff: *cutoff,
        profile: CUTOFF_PROFILE,
        grid: *grid,
        values: Vec::new(),
    };
    q.values = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            q.eval(grid.s(i), grid.t(j))
        })
        .collect();
    Ok(q)
}

fn cell(op: &WeightedOperator) -> f64 {
    op.grid.ds * op.grid.dt
}

/// Quadrature `ds dt phi^T K psi` of the weighted form.
pub fn form_value(op: &WeightedOperator, phi: &[f64], psi: &[f64]) -> Result<f64> {
    op.check_len(phi)?;
    op.check_len(psi)?;
    Ok(cell(op) * op.form(phi, psi))
}

/// Quadrature `ds dt sum m phi psi` of the weighted inner product.
pub fn weighted_inner(op: &WeightedOperator, phi: &[f64], psi: &[f64]) -> Result<f64> {
    op.check_len(phi)?;
    op.check_len(psi)?;
    Ok(cell(op) * op.weighted_dot(phi, psi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixElements {
    pub h: f64,
    pub x_min: f64,
    pub modes: Vec<usize>,
    /// `<phi_i, M phi_j>`.
    pub form: Vec<Vec<f64>>,
    /// `<phi_i, phi_j>_m`.
    pub gram: Vec<Vec<f64>>,
}

impl MatrixElements {
    /// `form - x_min gram`.
    pub fn shifted_form(&self) -> Vec<Vec<f64>> {
        self.form
            .iter()
            .zip(&self.gram)
            .map(|(f, g)| f.iter().zip(g).map(|(a, b)| a - self.x_min * b).collect())
            .collect()
    }

    /// Largest off-diagonal magnitudes of the shifted form and of the Gram
    /// matrix.
    pub fn off_diagonal_max(&self) -> (f64, f64) {
        let sf = self.shifted_form();
        let mut out = (0.0f64, 0.0f64);
        for i in 0..self.modes.len() {
            for j in 0..self.modes.len() {
                if i != j {
                    out.0 = out.0.max(sf[i][j].abs());
                    out.1 = out.1.max(self.gram[i][j].abs());
                }
            }
        }
        out
    }

    /// Ascending eigenvalues of `form c = mu gram c`.
    pub fn ritz_values(&self) -> Result<Vec<f64>> {
        let k = self.modes.len();
        let g = DMatrix::from_fn(k, k, |i, j| self.gram[i][j]);
        let f = DMatrix::from_fn(k, k, |i, j| self.form[i][j]);
        let chol = g
            .cholesky()
            .ok_or_else(|| StarkError::InvalidArgument("quasimode Gram matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(k, k))
            .ok_or_else(|| StarkError::InvalidArgument("singular Gram factor".into()))?;
        let c = &linv * f * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let mut mu: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
        mu.sort_by(f64::total_cmp);
        Ok(mu)
    }
}

pub fn matrix_elements(op: &WeightedOperator, modes: &[Quasimode]) -> Result<MatrixElements> {
    for q in modes {
        if q.grid != op.grid {
            return Err(StarkError::GridMismatch {
                expected: op.size(),
                got: q.values.len(),
            });
        }
        op.check_len(&q.values)?;
    }
    let k = modes.len();
    let kq: Vec<Vec<f64>> = modes.iter().map(|q| op.stiffness.mul(&q.values)).collect();
    let c = cell(op);
    let mut form = vec![vec![0.0; k]; k];
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let a = &modes[i].values;
            form[i][j] = c * a.iter().zip(&kq[j]).map(|(x, y)| x * y).sum::<f64>();
            gram[i][j] = c * op.weighted_dot(a, &modes[j].values);
        }
    }
    // exact symmetry of the stored tables
    for i in 0..k {
        for j in 0..i {
            let f = 0.5 * (form[i][j] + form[j][i]);
            form[i][j] = f;
            form[j][i] = f;
            let g = 0.5 * (gram[i][j] + gram[j][i]);
            gram[i][j] = g;
            gram[j][i] = g;
        }
    }
    Ok(MatrixElements {
        h: op.h,
        x_min: op.x_min,
        modes: modes.iter().map(|q| q.n).collect(),
        form,
        gram,
    })
}

/// Log-log fits of the largest off-diagonal entries against `h`: shifted
/// form first, Gram second.
pub fn fit_off_diagonal(tables: &[MatrixElements]) -> Result<(PowerFit, PowerFit)> {
    let hs: Vec<f64> = tables.iter().map(|t| t.h).collect();
    let (f, g): (Vec<f64>, Vec<f64>) = tables.iter().map(|t| t.off_diagonal_max()).unzip();
    Ok((power_law_fit(&hs, &f)?, power_law_fit(&hs, &g)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_tubular, build_patch_grid};
    use crate::eigensolve::smallest_sym;
    use crate::geometry::{BoundaryCurve, CurveSpec, PatchGeometry, TubularPatch};
    use crate::specfun::airy_zero;

    fn disk_setup(h: f64, cutoff: &CutoffOptions) -> WeightedOperator {
        let curve = BoundaryCurve::new(CurveSpec::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        })
        .unwrap();
        let patch = TubularPatch::new(curve).unwrap();
        let opts = quasimode_patch_options(h, 1.0, cutoff);
        let grid = build_patch_grid(h, patch.kappa0(), patch.bounds(), &opts).unwrap();
        assemble_tubular(&patch, &grid, h).unwrap()
    }

    fn modes(op: &WeightedOperator, count: usize, cutoff: &CutoffOptions) -> Vec<Quasimode> {
        (1..=count)
            .map(|n| build_quasimode_with(n, op.h, 1.0, &op.grid, cutoff).unwrap())
            .collect()
    }

    #[test]
    fn profile_is_a_plateau_bump() {
        assert_eq!(plateau(0.3, 1.0), 1.0);
        assert_eq!(plateau(-1.0, 1.0), 1.0);
        assert_eq!(plateau(1.5, 1.0), 0.0);
        assert_eq!(plateau(-2.0, 1.0), 0.0);
        assert!((plateau(1.25, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vanishes_on_the_boundary_and_outside_the_support() {
        let c = CutoffOptions::default();
        let op = disk_setup(0.02, &c);
        let q = build_quasimode_with(2, 0.02, 1.0, &op.grid, &c).unwrap();
        let (ls, _) = c.plateaus(0.02);
        for s in [-0.3, 0.0, 0.1, 0.7] {
            assert_eq!(q.eval(s, 0.0), 0.0);
        }
        for (k, v) in q.values.iter().enumerate() {
            let (i, _) = q.grid.coords(k);
            if q.grid.s(i).abs() > 1.5 * ls {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(q.values.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn norms_at_small_h() {
        let c = CutoffOptions::default();
        let h = 0.01;
        let op = disk_setup(h, &c);
        let q = build_quasimode_with(1, h, 1.0, &op.grid, &c).unwrap();
        let flat = q.flat_norm_sq();
        assert!((0.97..=1.0).contains(&flat), "{flat}");
        // m = 1 - t on the disk; the Airy mean of t is (2/3) z1 h^{2/3}
        let weighted = weighted_inner(&op, &q.values, &q.values).unwrap();
        let c1 = 1.05 * 2.0 / 3.0 * airy_zero(1).unwrap();
        assert!(weighted <= 1.0 && weighted >= 1.0 - c1 * h.powf(2.0 / 3.0), "{weighted}");
    }

    #[test]
    fn form_is_bilinear_and_bounded_below() {
        let c = CutoffOptions::default();
        let op = disk_setup(0.05, &c);
        let qs = modes(&op, 3, &c);
        let (a, b, d) = (&qs[0].values, &qs[1].values, &qs[2].values);
        let bd: Vec<f64> = b.iter().zip(d).map(|(x, y)| x + y).collect();
        let lhs = form_value(&op, a, &bd).unwrap();
        let rhs = form_value(&op, a, b).unwrap() + form_value(&op, a, d).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        for q in &qs {
            let f = form_value(&op, &q.values, &q.values).unwrap();
            let n = weighted_inner(&op, &q.values, &q.values).unwrap();
            assert!(f >= op.x_min * n);
        }
        assert!(matches!(form_value(&op, a, &a[1..]), Err(StarkError::GridMismatch { .. })));
    }

    #[test]
    fn opposite_parity_entries_vanish_on_the_disk() {
        let c = CutoffOptions::default();
        let op = disk_setup(0.05, &c);
        let me = matrix_elements(&op, &modes(&op, 4, &c)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if (i + j) % 2 == 1 {
                    assert!(me.gram[i][j].abs() < 1e-10, "gram ({i},{j}) {}", me.gram[i][j]);
                    assert!(me.form[i][j].abs() < 1e-10, "form ({i},{j}) {}", me.form[i][j]);
                }
            }
        }
    }

    #[test]
    fn ritz_values_bound_the_spectrum_from_above() {
        let c = CutoffOptions::default();
        let op = disk_setup(0.05, &c);
        let me = matrix_elements(&op, &modes(&op, 4, &c)).unwrap();
        let ritz = me.ritz_values().unwrap();
        let eig = smallest_sym(&op, 4, 1e-10).unwrap();
        for (r, l) in ritz.iter().zip(&eig.eigenvalues) {
            assert!(r >= l, "{r} < {l}");
            assert!(r - l < 2.0 * 0.05_f64.powf(4.0 / 3.0));
        }
    }

    #[test]
    fn cutoff_must_fit_the_grid() {
        let c = CutoffOptions::default();
        let (ls, lt) = c.plateaus(0.01);
        let grid = PatchGrid::new(1.4 * ls, 2.0 * lt, 41, 41);
        assert!(matches!(
            build_quasimode_with(1, 0.01, 1.0, &grid, &c),
            Err(StarkError::ScaleOverflow { .. })
        ));
        let grid = PatchGrid::new(2.0 * ls, 1.4 * lt, 41, 41);
        assert!(matches!(
            build_quasimode_with(1, 0.01, 1.0, &grid, &c),
            Err(StarkError::ScaleOverflow { .. })
        ));
        assert!(build_quasimode(1, 0.01, 1.0, &grid, 0.4).is_err());
    }

    #[test]
    fn matrix_elements_need_the_operator_grid() {
        let c = CutoffOptions::default();
        let a = disk_setup(0.05, &c);
        let b = disk_setup(0.04, &c);
        let q = build_quasimode_with(1, 0.04, 1.0, &b.grid, &c).unwrap();
        assert!(matches!(matrix_elements(&a, &[q]), Err(StarkError::GridMismatch { .. })));
    }
}
