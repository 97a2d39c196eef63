//! Finite-difference discretizations: the reduced operator on the tubular
//! patch (weighted, exactly symmetric) and the full operator on a Cartesian
//! grid with curved-boundary arms.

mod fullgrid;

pub use fullgrid::{assemble_fullgrid, AxisBox, FullGridOperator, FullGridOptions};

use serde::Serialize;

use crate::error::{Result, StarkError};
use crate::geometry::{PatchBounds, PatchGeometry};
use crate::sparse::{dot, CsrBuilder, CsrMatrix};

/// Tangential localization length `h^{1/2} (2/kappa0)^{1/4}`.
pub fn tangential_scale(h: f64, kappa0: f64) -> f64 {
    h.sqrt() * (2.0 / kappa0).powf(0.25)
}

/// Normal localization length `h^{2/3}`.
pub fn normal_scale(h: f64) -> f64 {
    h.powf(2.0 / 3.0)
}

/// Knobs of the patch grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchOptions {
    /// Depth cap `T <= c_T h^{2/3}`.
    pub c_t: f64,
    /// Nodes per localization length in each direction.
    pub points_per_scale: f64,
    /// Half-width cap in units of the tangential scale.
    pub s_scales: f64,
    /// Explicit square patch `|s| < delta`, `t < delta`.
    pub delta: Option<f64>,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            c_t: 20.0,
            points_per_scale: 12.0,
            s_scales: 6.0,
            delta: None,
        }
    }
}

/// Uniform interior grid on `(-half_width, half_width) x (0, depth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchGrid {
    pub half_width: f64,
    pub depth: f64,
    pub ns: usize,
    pub nt: usize,
    pub ds: f64,
    pub dt: f64,
    /// Unknowns are numbered with `s` varying fastest (else `t`), whichever
    /// keeps the bandwidth smaller.
    pub s_fastest: bool,
}

impl PatchGrid {
    pub fn new(half_width: f64, depth: f64, ns: usize, nt: usize) -> Self {
        PatchGrid {
            half_width,
            depth,
            ns,
            nt,
            ds: 2.0 * half_width / (ns + 1) as f64,
            dt: depth / (nt + 1) as f64,
            s_fastest: ns <= nt,
        }
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn s(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.ds
    }

    pub fn t(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dt
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.s_fastest {
            j * self.ns + i
        } else {
            i * self.nt + j
        }
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        if self.s_fastest {
            (k % self.ns, k / self.ns)
        } else {
            (k / self.nt, k % self.nt)
        }
    }

    /// Same patch with both spacings halved exactly.
    pub fn refine(&self) -> PatchGrid {
        PatchGrid::new(self.half_width, self.depth, 2 * self.ns + 1, 2 * self.nt + 1)
    }

    pub fn id(&self) -> String {
        format!("{}x{}", self.ns, self.nt)
    }
}

/// Chooses the patch extent and node counts for one `h`.
pub fn build_patch_grid(
    h: f64,
    kappa0: f64,
    bounds: PatchBounds,
    opts: &PatchOptions,
) -> Result<PatchGrid> {
    if !(h > 0.0 && h <= 0.2) {
        return Err(StarkError::InvalidArgument(format!("h must lie in (0, 0.2], got {h}")));
    }
    if opts.c_t < 15.0 {
        return Err(StarkError::InvalidArgument(format!("c_T must be >= 15, got {}", opts.c_t)));
    }
    if opts.points_per_scale < 12.0 {
        return Err(StarkError::InvalidArgument(format!(
            "points_per_scale must be >= 12, got {}",
            opts.points_per_scale
        )));
    }
    let lt = normal_scale(h);
    let ls = tangential_scale(h, kappa0);
    let (half_width, delta_depth) = match opts.delta {
        Some(delta) => {
            if !(delta > 0.0 && delta <= bounds.half_width && delta <= bounds.depth) {
                return Err(StarkError::InvalidArgument(format!(
                    "delta = {delta} exceeds the validated patch ({} x {})",
                    bounds.half_width, bounds.depth
                )));
            }
            (delta, delta)
        }
        None => (bounds.half_width.min(opts.s_scales * ls), bounds.depth),
    };
    if delta_depth < 5.0 * lt {
        return Err(StarkError::PatchTooShallow {
            depth: delta_depth,
            required: 5.0 * lt,
        });
    }
    let depth = delta_depth.min(opts.c_t * lt);
    let mut ns = (2.0 * half_width / (ls / opts.points_per_scale)).ceil() as usize - 1;
    if ns % 2 == 0 {
        // odd count puts a node on s = 0
        ns += 1;
    }
    let nt = (depth / (lt / opts.points_per_scale)).ceil() as usize - 1;
    Ok(PatchGrid::new(half_width, depth, ns, nt))
}

/// The pencil `stiffness u = lambda diag(weight) u` of the reduced operator.
#[derive(Debug, Clone)]
pub struct WeightedOperator {
    pub stiffness: CsrMatrix,
    pub weight: Vec<f64>,
    pub x_min: f64,
    pub kappa0: f64,
    pub grid: PatchGrid,
    pub h: f64,
    /// Physical position `tau(s_i, t_j)` of every unknown.
    pub positions: Vec<[f64; 2]>,
    /// The site `A0`.
    pub site: [f64; 2],
}

impl WeightedOperator {
    /// Operator from explicit parts (synthetic problems in tests).
    pub fn from_parts(stiffness: CsrMatrix, weight: Vec<f64>, x_min: f64, h: f64, grid: PatchGrid) -> Result<Self> {
        let n = stiffness.size();
        if weight.len() != n || grid.len() != n {
            return Err(StarkError::GridMismatch {
                expected: n,
                got: weight.len().min(grid.len()),
            });
        }
        let positions = (0..n)
            .map(|k| {
                let (i, j) = grid.coords(k);
                [x_min + grid.t(j), grid.s(i)]
            })
            .collect();
        Ok(WeightedOperator {
            stiffness,
            weight,
            x_min,
            kappa0: 0.0,
            grid,
            h,
            positions,
            site: [x_min, 0.0],
        })
    }

    pub fn size(&self) -> usize {
        self.weight.len()
    }

    pub fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.size() {
            return Err(StarkError::GridMismatch {
                expected: self.size(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `u^T diag(m) v`.
    pub fn weighted_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weight).map(|((a, b), m)| a * b * m).sum()
    }

    /// `u^T K v`.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.stiffness.mul(v))
    }

    pub fn rayleigh(&self, v: &[f64]) -> f64 {
        self.form(v, v) / self.weighted_dot(v, v)
    }
}

/// Flux-form discretization of
/// `-h^2 m^{-1} d_s m^{-1} d_s - h^2 m^{-1} d_t m d_t + tau_1` with Dirichlet
/// data on all four patch edges.
pub fn assemble_tubular<G: PatchGeometry>(geom: &G, grid: &PatchGrid, h: f64) -> Result<WeightedOperator> {
    let bounds = geom.bounds();
    let kappa0 = geom.kappa0();
    let slack = 1.0 + 1e-12;
    let (ls, lt) = (tangential_scale(h, kappa0), normal_scale(h));
    if grid.ns == 0 || grid.nt == 0 {
        return Err(StarkError::Resolution("empty patch grid".into()));
    }
    if grid.ds > ls / 12.0 * slack || grid.dt > lt / 12.0 * slack {
        return Err(StarkError::Resolution(format!(
            "spacings ({}, {}) exceed the scales ({}, {}) / 12",
            grid.ds, grid.dt, ls, lt
        )));
    }
    if grid.half_width > bounds.half_width * slack || grid.depth > bounds.depth * slack {
        return Err(StarkError::OutOfPatch {
            s: grid.half_width,
            t: grid.depth,
        });
    }
    let (ns, nt) = (grid.ns, grid.nt);
    let node = |i: usize| geom.frame(grid.s(i));
    let nodes: Vec<_> = (0..ns).map(node).collect();
    // s_{i - 1/2} for i = 0..=ns
    let halves: Vec<_> = (0..=ns)
        .map(|i| geom.frame(-grid.half_width + (i as f64 + 0.5) * grid.ds))
        .collect();
    let t_half = |j: usize| (j as f64 + 0.5) * grid.dt;

    let m_node = |i: usize, j: usize| 1.0 - nodes[i].curvature * grid.t(j);
    let m_s = |i: usize, j: usize| 1.0 - halves[i].curvature * grid.t(j);
    let m_t = |i: usize, j: usize| 1.0 - nodes[i].curvature * t_half(j);
    for i in 0..ns {
        for j in 0..nt {
            let v = m_node(i, j).min(m_t(i, j + 1));
            if v <= 0.0 {
                return Err(StarkError::WeightNonPositive { i, j, value: v });
            }
        }
    }
    for i in 0..=ns {
        for j in 0..nt {
            let v = m_s(i, j);
            if v <= 0.0 {
                return Err(StarkError::WeightNonPositive { i, j, value: v });
            }
        }
    }

    let cs = h * h / (grid.ds * grid.ds);
    let ct = h * h / (grid.dt * grid.dt);
    let n = grid.len();
    let mut weight = vec![0.0; n];
    let mut positions = vec![[0.0; 2]; n];
    let mut b = CsrBuilder::new(n, 5 * n);
    for k in 0..n {
        let (i, j) = grid.coords(k);
        let t = grid.t(j);
        let f = &nodes[i];
        let m = m_node(i, j);
        let p = [f.point[0] - t * f.normal[0], f.point[1] - t * f.normal[1]];
        let west = cs / m_s(i, j);
        let east = cs / m_s(i + 1, j);
        let south = ct * m_t(i, j);
        let north = ct * m_t(i, j + 1);
        b.add(k, west + east + south + north + m * p[0]);
        if i > 0 {
            b.add(grid.index(i - 1, j), -west);
        }
        if i + 1 < ns {
            b.add(grid.index(i + 1, j), -east);
        }
        if j > 0 {
            b.add(grid.index(i, j - 1), -south);
        }
        if j + 1 < nt {
            b.add(grid.index(i, j + 1), -north);
        }
        b.finish_row();
        weight[k] = m;
        positions[k] = p;
    }
    Ok(WeightedOperator {
        stiffness: b.build(),
        weight,
        x_min: geom.x_min(),
        kappa0,
        grid: *grid,
        h,
        positions,
        site: geom.site(),
    })
}
