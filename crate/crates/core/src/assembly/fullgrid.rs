use serde::Serialize;

use crate::error::{Result, StarkError};
use crate::geometry::PlanarDomain;
use crate::sparse::{CsrBuilder, CsrMatrix};

/// Axis-aligned rectangle, the synthetic domain for grid-aligned tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl PlanarDomain for AxisBox {
    fn level(&self, p: [f64; 2]) -> f64 {
        (self.lo[0] - p[0])
            .max(p[0] - self.hi[0])
            .max(self.lo[1] - p[1])
            .max(p[1] - self.hi[1])
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullGridOptions {
    /// Grid spacing `a`.
    pub spacing: f64,
    /// Optional Dirichlet cut `x < x_max`, exponentially accurate once the
    /// cut lies well inside the classically forbidden region.
    pub x_max: Option<f64>,
}

/// Shortley-Weller discretization of `-h^2 Laplacian + x` on a Cartesian grid.
#[derive(Debug, Clone)]
pub struct FullGridOperator {
    pub matrix: CsrMatrix,
    pub spacing: f64,
    /// Position of grid node `(0, 0)`.
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Grid coordinates of each unknown.
    pub nodes: Vec<(usize, usize)>,
    pub positions: Vec<[f64; 2]>,
    /// Arm lengths `(east, west, north, south)` at boundary-adjacent unknowns.
    pub arms: Vec<(usize, [f64; 4])>,
    pub h: f64,
    /// Smallest node abscissa, a lower bound for the potential on the grid.
    pub x_lower: f64,
}

impl FullGridOperator {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Distance fraction in `(0, 1]` from an inside node to the boundary along a
/// grid line, bisected to an absolute accuracy of `1e-12`.
fn boundary_fraction(level: &impl Fn([f64; 2]) -> f64, p: [f64; 2], dir: [f64; 2], a: f64) -> f64 {
    let at = |lam: f64| level([p[0] + lam * a * dir[0], p[1] + lam * a * dir[1]]);
    if at(1.0) == 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while (hi - lo) * a > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn assemble_fullgrid<D: PlanarDomain>(domain: &D, h: f64, opts: &FullGridOptions) -> Result<FullGridOperator> {
    let a = opts.spacing;
    if !(h > 0.0 && a > 0.0) {
        return Err(StarkError::InvalidArgument("h and spacing must be positive".into()));
    }
    if a > h.powf(2.0 / 3.0) / 10.0 * (1.0 + 1e-12) {
        return Err(StarkError::Resolution(format!(
            "spacing {a} exceeds h^(2/3) / 10 = {}",
            h.powf(2.0 / 3.0) / 10.0
        )));
    }
    let x_max = opts.x_max.unwrap_or(f64::INFINITY);
    let level = |p: [f64; 2]| domain.level(p).max(p[0] - x_max);
    let (lo, mut hi) = domain.bounding_box();
    hi[0] = hi[0].min(x_max);
    if hi[0] <= lo[0] {
        return Err(StarkError::InvalidArgument("x cut removes the whole domain".into()));
    }
    let nx = ((hi[0] - lo[0]) / a).floor() as usize + 1;
    let ny = ((hi[1] - lo[1]) / a).floor() as usize + 1;
    let pos = |i: usize, j: usize| [lo[0] + i as f64 * a, lo[1] + j as f64 * a];

    let mut index = vec![usize::MAX; nx * ny];
    let mut nodes = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if level(pos(i, j)) < 0.0 {
                index[j * nx + i] = nodes.len();
                nodes.push((i, j));
            }
        }
    }
    let n = nodes.len();
    if n == 0 {
        return Err(StarkError::Resolution("no grid nodes inside the domain".into()));
    }
    let lookup = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
            return None;
        }
        let k = index[j as usize * nx + i as usize];
        (k != usize::MAX).then_some(k)
    };

    let h2 = h * h;
    let dirs: [([f64; 2], (isize, isize)); 4] = [
        ([1.0, 0.0], (1, 0)),
        ([-1.0, 0.0], (-1, 0)),
        ([0.0, 1.0], (0, 1)),
        ([0.0, -1.0], (0, -1)),
    ];
    let mut b = CsrBuilder::new(n, 5 * n);
    let mut arms_out = Vec::new();
    let mut positions = Vec::with_capacity(n);
    let mut x_lower = f64::INFINITY;
    for (k, &(i, j)) in nodes.iter().enumerate() {
        let p = pos(i, j);
        positions.push(p);
        x_lower = x_lower.min(p[0]);
        let mut arm = [a; 4];
        let mut nbr = [None; 4];
        for (d, (dir, (di, dj))) in dirs.iter().enumerate() {
            match lookup(i as isize + di, j as isize + dj) {
                Some(q) => nbr[d] = Some(q),
                None => {
                    arm[d] = boundary_fraction(&level, p, *dir, a) * a;
                    if arm[d] < 1e-9 * a {
                        return Err(StarkError::DegenerateArm { node: k, arm: arm[d] });
                    }
                }
            }
        }
        let mut diag = p[0];
        for (e, w) in [(0, 1), (2, 3)] {
            let (ae, aw) = (arm[e], arm[w]);
            diag += h2 * 2.0 / (ae * aw);
            if let Some(q) = nbr[e] {
                b.add(q, -h2 * 2.0 / (ae * (ae + aw)));
            }
            if let Some(q) = nbr[w] {
                b.add(q, -h2 * 2.0 / (aw * (ae + aw)));
            }
        }
        b.add(k, diag);
        b.finish_row();
        if nbr.iter().any(Option::is_none) {
            arms_out.push((k, arm));
        }
    }
    Ok(FullGridOperator {
        matrix: b.build(),
        spacing: a,
        origin: lo,
        nx,
        ny,
        nodes,
        positions,
        arms: arms_out,
        h,
        x_lower,
    })
}
