//! Boundary curves of admissible domains, the leftmost site `A0` and the
//! boundary-fitted (tubular) coordinates around it.
//!
//! Every curve kind is star-shaped about its center and carries a natural
//! angular parameter `phi`. Arc length is measured counterclockwise from the
//! point at polar angle `pi`, so `s = 0` is the leftmost point for all
//! centered, left-right symmetric shapes. The outward normal `n` and the
//! signed curvature satisfy `gamma'' = -kappa n`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, StarkError};
use crate::quad::adaptive_simpson;

/// Panels of the cumulative arc-length table.
const ARC_PANELS: usize = 512;
/// Dense sample used for validation sweeps and the coarse minimum search.
const SWEEP_SAMPLES: usize = 2048;
const COARSE_MIN_SAMPLES: usize = 4096;

/// Serializable description of a boundary curve.
///
/// JSON form: `{"kind":"ellipse","center":[0,0],"a":2.0,"b":1.0}`,
/// `{"kind":"circle","center":[0,0],"radius":1.0}` or
/// `{"kind":"fourier-radial","center":[0,0],"r0":1.0,"cos":[0.0,0.1],"sin":[]}`
/// where `cos[k-1]`, `sin[k-1]` multiply `cos(k phi)`, `sin(k phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    FourierRadial {
        center: [f64; 2],
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl CurveSpec {
    pub fn center(&self) -> [f64; 2] {
        match self {
            CurveSpec::Circle { center, .. }
            | CurveSpec::Ellipse { center, .. }
            | CurveSpec::FourierRadial { center, .. } => *center,
        }
    }

    /// Same shape translated by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> CurveSpec {
        let mut out = self.clone();
        match &mut out {
            CurveSpec::Circle { center, .. }
            | CurveSpec::Ellipse { center, .. }
            | CurveSpec::FourierRadial { center, .. } => {
                center[0] += dx;
                center[1] += dy;
            }
        }
        out
    }

    fn radius_terms(&self, phi: f64) -> (f64, f64, f64) {
        match self {
            CurveSpec::FourierRadial { r0, cos, sin, .. } => {
                let (mut r, mut r1, mut r2) = (*r0, 0.0, 0.0);
                for (k, c) in cos.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (sk, ck) = (kf * phi).sin_cos();
                    r += c * ck;
                    r1 -= c * kf * sk;
                    r2 -= c * kf * kf * ck;
                }
                for (k, d) in sin.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (sk, ck) = (kf * phi).sin_cos();
                    r += d * sk;
                    r1 += d * kf * ck;
                    r2 -= d * kf * kf * sk;
                }
                (r, r1, r2)
            }
            _ => unreachable!("radius_terms is only used by fourier-radial curves"),
        }
    }

    /// Position and first two derivatives in the natural parameter.
    fn jet(&self, phi: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let (sp, cp) = phi.sin_cos();
        match self {
            CurveSpec::Circle { center, radius } => (
                [center[0] + radius * cp, center[1] + radius * sp],
                [-radius * sp, radius * cp],
                [-radius * cp, -radius * sp],
            ),
            CurveSpec::Ellipse { center, a, b } => (
                [center[0] + a * cp, center[1] + b * sp],
                [-a * sp, b * cp],
                [-a * cp, -b * sp],
            ),
            CurveSpec::FourierRadial { center, .. } => {
                let (r, r1, r2) = self.radius_terms(phi);
                let u = [cp, sp];
                let up = [-sp, cp];
                (
                    [center[0] + r * u[0], center[1] + r * u[1]],
                    [r1 * u[0] + r * up[0], r1 * u[1] + r * up[1]],
                    [
                        r2 * u[0] + 2.0 * r1 * up[0] - r * u[0],
                        r2 * u[1] + 2.0 * r1 * up[1] - r * u[1],
                    ],
                )
            }
        }
    }

    /// Position at natural parameter `phi`.
    pub fn point_at_parameter(&self, phi: f64) -> [f64; 2] {
        self.jet(phi).0
    }

    fn speed(&self, phi: f64) -> f64 {
        let d = self.jet(phi).1;
        d[0].hypot(d[1])
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        let c = self.center();
        if !finite(c[0]) || !finite(c[1]) {
            return Err(StarkError::InvalidCurve("center must be finite".into()));
        }
        match self {
            CurveSpec::Circle { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(StarkError::InvalidCurve(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
            }
            CurveSpec::Ellipse { a, b, .. } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(StarkError::InvalidCurve(format!(
                        "semi-axes must be positive, got a = {a}, b = {b}"
                    )));
                }
            }
            CurveSpec::FourierRadial { r0, cos, sin, .. } => {
                if !r0.is_finite() || cos.iter().chain(sin).any(|v| !v.is_finite()) {
                    return Err(StarkError::InvalidCurve("non-finite coefficient".into()));
                }
                let rmin = (0..SWEEP_SAMPLES)
                    .map(|k| self.radius_terms(2.0 * PI * k as f64 / SWEEP_SAMPLES as f64).0)
                    .fold(f64::INFINITY, f64::min);
                if rmin <= 0.0 {
                    return Err(StarkError::InvalidCurve(format!(
                        "radius function must stay positive, min sample {rmin}"
                    )));
                }
                let poly: Vec<[f64; 2]> = (0..SWEEP_SAMPLES)
                    .map(|k| self.point_at_parameter(2.0 * PI * k as f64 / SWEEP_SAMPLES as f64))
                    .collect();
                if polygon_self_intersects(&poly) {
                    return Err(StarkError::InvalidCurve("curve self-intersects".into()));
                }
            }
        }
        Ok(())
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Brute-force segment sweep over a closed polygon (non-adjacent pairs only).
fn polygon_self_intersects(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let seg = |k: usize| (poly[k], poly[(k + 1) % n]);
    for i in 0..n {
        let (a1, a2) = seg(i);
        let (lo_x, hi_x) = (a1[0].min(a2[0]), a1[0].max(a2[0]));
        let (lo_y, hi_y) = (a1[1].min(a2[1]), a1[1].max(a2[1]));
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (b1, b2) = seg(j);
            if b1[0].max(b2[0]) < lo_x
                || b1[0].min(b2[0]) > hi_x
                || b1[1].max(b2[1]) < lo_y
                || b1[1].min(b2[1]) > hi_y
            {
                continue;
            }
            if segments_cross(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

/// Point, unit tangent, outward unit normal and signed curvature at one
/// boundary location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub point: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
}

/// A validated closed curve with an arc-length parametrization.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    spec: CurveSpec,
    /// Natural parameter at each panel edge, starting at `pi`.
    panel_phi: Vec<f64>,
    /// Cumulative arc length at each panel edge.
    panel_s: Vec<f64>,
    length: f64,
}

impl BoundaryCurve {
    pub fn new(spec: CurveSpec) -> Result<Self> {
        spec.validate()?;
        let dphi = 2.0 * PI / ARC_PANELS as f64;
        let panel_phi: Vec<f64> = (0..=ARC_PANELS).map(|k| PI + k as f64 * dphi).collect();
        let mut panel_s = Vec::with_capacity(ARC_PANELS + 1);
        panel_s.push(0.0);
        let speed = |phi: f64| spec.speed(phi);
        let mut acc = 0.0;
        for k in 0..ARC_PANELS {
            let (a, b) = (panel_phi[k], panel_phi[k + 1]);
            let scale = speed(0.5 * (a + b)) * (b - a);
            acc += adaptive_simpson(&speed, a, b, 1e-12 * scale);
            panel_s.push(acc);
        }
        let curve = BoundaryCurve {
            spec,
            panel_phi,
            panel_s,
            length: acc,
        };
        if curve.signed_area() <= 0.0 {
            return Err(StarkError::InvalidCurve(
                "curve must be counterclockwise (positive signed area)".into(),
            ));
        }
        Ok(curve)
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    /// Total arc length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Natural parameter corresponding to arc length `s` (taken modulo `L`).
    pub fn parameter_at(&self, s: f64) -> f64 {
        let target = s.rem_euclid(self.length);
        let k = self
            .panel_s
            .partition_point(|&v| v <= target)
            .clamp(1, ARC_PANELS)
            - 1;
        let (phi0, s0) = (self.panel_phi[k], self.panel_s[k]);
        let speed = |phi: f64| self.spec.speed(phi);
        let mut phi = phi0 + (target - s0) / speed(phi0);
        let tol = 1e-15 * self.length;
        for _ in 0..40 {
            let partial = adaptive_simpson(&speed, phi0, phi, 1e-14 * self.length);
            let f = s0 + partial - target;
            phi -= f / speed(phi);
            if f.abs() <= tol {
                break;
            }
        }
        phi
    }

    pub fn frame_at_parameter(&self, phi: f64) -> BoundaryFrame {
        let (p, d1, d2) = self.spec.jet(phi);
        let speed = d1[0].hypot(d1[1]);
        let tangent = [d1[0] / speed, d1[1] / speed];
        BoundaryFrame {
            point: p,
            tangent,
            normal: [tangent[1], -tangent[0]],
            curvature: (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3),
        }
    }

    pub fn frame(&self, s: f64) -> BoundaryFrame {
        self.frame_at_parameter(self.parameter_at(s))
    }

    /// `gamma(s)`.
    pub fn evaluate(&self, s: f64) -> [f64; 2] {
        self.spec.point_at_parameter(self.parameter_at(s))
    }

    /// Signed curvature, positive on convex arcs.
    pub fn curvature(&self, s: f64) -> f64 {
        self.frame(s).curvature
    }

    /// Shoelace area of a dense sample; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        let n = SWEEP_SAMPLES;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|k| self.spec.point_at_parameter(PI + 2.0 * PI * k as f64 / n as f64))
            .collect();
        0.5 * (0..n)
            .map(|k| {
                let (p, q) = (pts[k], pts[(k + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    /// Largest curvature over a dense sample.
    pub fn max_curvature(&self) -> f64 {
        (0..SWEEP_SAMPLES)
            .map(|k| {
                self.frame_at_parameter(PI + 2.0 * PI * k as f64 / SWEEP_SAMPLES as f64)
                    .curvature
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn arc_length_of_parameter(&self, phi: f64) -> f64 {
        let phi = PI + (phi - PI).rem_euclid(2.0 * PI);
        let k = ((phi - PI) / (2.0 * PI / ARC_PANELS as f64)) as usize;
        let k = k.min(ARC_PANELS - 1);
        let speed = |p: f64| self.spec.speed(p);
        self.panel_s[k] + adaptive_simpson(&speed, self.panel_phi[k], phi, 1e-14 * self.length)
    }
}

/// A closed planar region with a signed level function (negative inside).
pub trait PlanarDomain {
    fn level(&self, p: [f64; 2]) -> f64;
    /// Lower-left and upper-right corners of an enclosing box.
    fn bounding_box(&self) -> ([f64; 2], [f64; 2]);
}

impl PlanarDomain for BoundaryCurve {
    fn level(&self, p: [f64; 2]) -> f64 {
        let c = self.spec.center();
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        match &self.spec {
            CurveSpec::Circle { radius, .. } => dx.hypot(dy) - radius,
            CurveSpec::Ellipse { a, b, .. } => (dx / a).hypot(dy / b) - 1.0,
            CurveSpec::FourierRadial { .. } => {
                dx.hypot(dy) - self.spec.radius_terms(dy.atan2(dx)).0
            }
        }
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for k in 0..SWEEP_SAMPLES {
            let p = self
                .spec
                .point_at_parameter(2.0 * PI * k as f64 / SWEEP_SAMPLES as f64);
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let pad = 1e-3 * self.length;
        ([lo[0] - pad, lo[1] - pad], [hi[0] + pad, hi[1] + pad])
    }
}

/// The leftmost boundary site `A0` and the geometric inputs of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinSite {
    /// Arc-length position of `A0`.
    pub s0: f64,
    pub a0: [f64; 2],
    pub x_min: f64,
    pub kappa0: f64,
}

/// Finds the unique minimizer of the first coordinate over the boundary.
pub fn locate_min(curve: &BoundaryCurve) -> Result<MinSite> {
    let spec = &curve.spec;
    let n = COARSE_MIN_SAMPLES;
    let dphi = 2.0 * PI / n as f64;
    let phis: Vec<f64> = (0..n).map(|k| PI + k as f64 * dphi).collect();
    let xs: Vec<f64> = phis.iter().map(|&p| spec.point_at_parameter(p)[0]).collect();
    let global = (0..n)
        .min_by(|&i, &j| xs[i].total_cmp(&xs[j]))
        .expect("non-empty sample");

    // Golden-section search on x(phi), then a bracketed Newton polish of
    // dx/dphi = 0 to resolve the site below the sqrt(eps) floor of the
    // function values.
    let x_of = |p: f64| spec.point_at_parameter(p)[0];
    let mut lo = phis[global] - dphi;
    let mut hi = phis[global] + dphi;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (x_of(c), x_of(d));
    while hi - lo > 1e-10 * curve.length {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = x_of(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = x_of(d);
        }
    }
    let dx = |p: f64| spec.jet(p).1[0];
    // flat contacts can put the discrete minimum a few samples off the root
    let (mut a, mut b) = (phis[global] - dphi, phis[global] + dphi);
    for _ in 0..64 {
        if dx(a) < 0.0 {
            break;
        }
        a -= dphi;
    }
    for _ in 0..64 {
        if dx(b) > 0.0 {
            break;
        }
        b += dphi;
    }
    let mut phi = (0.5 * (lo + hi)).clamp(a, b);
    if dx(a) < 0.0 && dx(b) > 0.0 {
        for _ in 0..200 {
            let (_, d1, d2) = spec.jet(phi);
            if d1[0].abs() <= 4.0 * f64::EPSILON * d1[1].abs() {
                break;
            }
            if d1[0] < 0.0 {
                a = phi;
            } else {
                b = phi;
            }
            let newton = if d2[0] > 0.0 { phi - d1[0] / d2[0] } else { f64::NAN };
            let next = if newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (next - phi).abs() <= 1e-15 * (1.0 + phi.abs()) || d1[0] == 0.0 {
                phi = next;
                break;
            }
            phi = next;
        }
    }

    let frame = curve.frame_at_parameter(phi);
    let s0 = curve.arc_length_of_parameter(phi);
    if frame.curvature <= 1e-9 {
        return Err(StarkError::NonPositiveCurvature {
            kappa: frame.curvature,
        });
    }
    let s_of = |k: usize| curve.arc_length_of_parameter(phis[k]);
    for k in 0..n {
        let (prev, next) = (xs[(k + n - 1) % n], xs[(k + 1) % n]);
        if k != global && xs[k] <= prev && xs[k] <= next && xs[k] - xs[global] <= 1e-9 {
            let (sa, sb) = (s_of(global), s_of(k));
            let gap = (sa - sb).abs();
            let sep = gap.min(curve.length - gap);
            if sep > 1e-3 * curve.length {
                return Err(StarkError::NonUniqueMinimum {
                    first: sa,
                    second: sb,
                });
            }
        }
    }

    Ok(MinSite {
        s0,
        a0: frame.point,
        x_min: frame.point[0],
        kappa0: frame.curvature,
    })
}

/// Extent of the `(s, t)` rectangle on which the tubular map is validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchBounds {
    /// Largest admissible `|s|`.
    pub half_width: f64,
    /// Largest admissible `t`.
    pub depth: f64,
}

/// Boundary data of a rectangular `(s, t)` patch as used by the assembly.
pub trait PatchGeometry {
    fn x_min(&self) -> f64;
    fn kappa0(&self) -> f64;
    fn bounds(&self) -> PatchBounds;
    /// Boundary frame at offset `s` from the site.
    fn frame(&self, s: f64) -> BoundaryFrame;
    /// Position of the site `A0`.
    fn site(&self) -> [f64; 2];
}

/// Tubular coordinates `tau(s, t) = gamma(s0 + s) - t n(s0 + s)` around `A0`.
#[derive(Debug, Clone)]
pub struct TubularPatch {
    curve: BoundaryCurve,
    site: MinSite,
    bounds: PatchBounds,
}

impl TubularPatch {
    pub fn new(curve: BoundaryCurve) -> Result<Self> {
        let site = locate_min(&curve)?;
        Ok(Self::with_site(curve, site))
    }

    pub fn with_site(curve: BoundaryCurve, site: MinSite) -> Self {
        let bounds = patch_bounds(&curve, &site);
        TubularPatch {
            curve,
            site,
            bounds,
        }
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn min_site(&self) -> &MinSite {
        &self.site
    }

    fn check(&self, s: f64, t: f64) -> Result<()> {
        let slack = 1e-12 * self.curve.length;
        if s.abs() > self.bounds.half_width + slack || t < -slack || t > self.bounds.depth + slack
        {
            return Err(StarkError::OutOfPatch { s, t });
        }
        Ok(())
    }

    pub fn tubular_map(&self, s: f64, t: f64) -> Result<[f64; 2]> {
        self.check(s, t)?;
        let f = self.frame(s);
        Ok([f.point[0] - t * f.normal[0], f.point[1] - t * f.normal[1]])
    }

    /// `m(s, t) = 1 - kappa(s0 + s) t`.
    pub fn jacobian_weight(&self, s: f64, t: f64) -> Result<f64> {
        self.check(s, t)?;
        Ok(1.0 - self.frame(s).curvature * t)
    }

    /// `tau_1(s, t) - (x_min + kappa0 s^2 / 2 + t)`.
    pub fn tau1_taylor_residual(&self, s: f64, t: f64) -> Result<f64> {
        let p = self.tubular_map(s, t)?;
        Ok(p[0] - (self.site.x_min + 0.5 * self.site.kappa0 * s * s + t))
    }
}

impl PatchGeometry for TubularPatch {
    fn x_min(&self) -> f64 {
        self.site.x_min
    }
    fn kappa0(&self) -> f64 {
        self.site.kappa0
    }
    fn bounds(&self) -> PatchBounds {
        self.bounds
    }
    fn frame(&self, s: f64) -> BoundaryFrame {
        self.curve.frame(self.site.s0 + s)
    }
    fn site(&self) -> [f64; 2] {
        self.site.a0
    }
}

/// Validated patch extent: `|s|` stays on the arc where the boundary is
/// convex and `x` grows away from `A0`, and `t < 0.8 / kappa_max` keeps
/// `m >= 0.2` and the map injective (rolling-disk radius of a convex curve).
pub fn patch_bounds(curve: &BoundaryCurve, site: &MinSite) -> PatchBounds {
    let l = curve.length;
    let steps = COARSE_MIN_SAMPLES / 2;
    let ds = 0.5 * l / steps as f64;
    let mut valid = 0.0;
    for k in 1..steps {
        let s = k as f64 * ds;
        let fp = curve.frame(site.s0 + s);
        let fm = curve.frame(site.s0 - s);
        if fp.curvature <= 0.0 || fm.curvature <= 0.0 || fp.tangent[0] < 0.0 || fm.tangent[0] > 0.0
        {
            break;
        }
        valid = s;
    }
    PatchBounds {
        half_width: (0.9 * valid).min(0.45 * l),
        depth: 0.8 / curve.max_curvature(),
    }
}

/// Synthetic straight-boundary patch: `kappa = 0`, `m = 1` and
/// `tau_1 = x_min + kappa0 s^2 / 2 + t` exactly. Its operator is the
/// separable model `A_h (x) 1 + 1 (x) H_h` shifted by `x_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatModelPatch {
    pub x_min: f64,
    pub kappa0: f64,
    pub bounds: PatchBounds,
}

impl PatchGeometry for FlatModelPatch {
    fn x_min(&self) -> f64 {
        self.x_min
    }
    fn kappa0(&self) -> f64 {
        self.kappa0
    }
    fn bounds(&self) -> PatchBounds {
        self.bounds
    }
    fn frame(&self, s: f64) -> BoundaryFrame {
        BoundaryFrame {
            point: [self.x_min + 0.5 * self.kappa0 * s * s, s],
            tangent: [0.0, 1.0],
            normal: [-1.0, 0.0],
            curvature: 0.0,
        }
    }
    fn site(&self) -> [f64; 2] {
        [self.x_min, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn circle(c: [f64; 2], r: f64) -> BoundaryCurve {
        BoundaryCurve::new(CurveSpec::Circle {
            center: c,
            radius: r,
        })
        .unwrap()
    }

    /// Curvature from central differences of the natural parametrization.
    fn curvature_oracle(spec: &CurveSpec, phi: f64, step: f64) -> f64 {
        let p = |q: f64| spec.point_at_parameter(q);
        let (pm, p0, pp) = (p(phi - step), p(phi), p(phi + step));
        let d1 = [(pp[0] - pm[0]) / (2.0 * step), (pp[1] - pm[1]) / (2.0 * step)];
        let d2 = [
            (pp[0] - 2.0 * p0[0] + pm[0]) / (step * step),
            (pp[1] - 2.0 * p0[1] + pm[1]) / (step * step),
        ];
        (d1[0] * d2[1] - d1[1] * d2[0]) / d1[0].hypot(d1[1]).powi(3)
    }

    #[test]
    fn unit_circle_anchor_and_orientation() {
        let c = circle([0.0, 0.0], 1.0);
        let p = c.evaluate(0.0);
        assert_abs_diff_eq!(p[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-14);
        assert!(c.signed_area() > 0.0);
        assert_abs_diff_eq!(c.length(), 2.0 * PI, epsilon = 1e-12);
        let end = c.evaluate(c.length() * (1.0 - 1e-15));
        assert!((end[0] + 1.0).hypot(end[1]) < 1e-12 * c.length());
    }

    #[test]
    fn ellipse_left_point_at_s_zero() {
        let e = BoundaryCurve::new(CurveSpec::Ellipse {
            center: [0.0, 0.0],
            a: 2.0,
            b: 1.0,
        })
        .unwrap();
        let p = e.evaluate(0.0);
        assert_abs_diff_eq!(p[0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn arc_length_parametrization_has_unit_speed() {
        let e = BoundaryCurve::new(CurveSpec::FourierRadial {
            center: [0.3, -0.2],
            r0: 1.0,
            cos: vec![0.0, 0.1],
            sin: vec![0.0, 0.0, 0.05],
        })
        .unwrap();
        let l = e.length();
        let eps = 1e-4;
        for k in 0..50 {
            let s = l * (k as f64 + 0.3) / 50.0;
            let (p, q) = (e.evaluate(s - eps), e.evaluate(s + eps));
            let speed = (q[0] - p[0]).hypot(q[1] - p[1]) / (2.0 * eps);
            // chord/arc defect is O(kappa^2 eps^2)
            assert!((speed - 1.0).abs() < 1e-8, "speed {speed} at s = {s}");
        }
    }

    #[test]
    fn circle_curvature_is_inverse_radius() {
        let c = circle([0.5, 1.0], 2.0);
        for s in [0.0, 0.7, 3.0, 11.0] {
            assert_abs_diff_eq!(c.curvature(s), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipse_curvature_at_left_point_matches_oracle() {
        let spec = CurveSpec::Ellipse {
            center: [0.0, 0.0],
            a: 2.0,
            b: 1.0,
        };
        let oracle = curvature_oracle(&spec, PI, 1e-5);
        assert_abs_diff_eq!(oracle, 2.0, epsilon = 1e-5);
        let e = BoundaryCurve::new(spec).unwrap();
        assert_abs_diff_eq!(e.curvature(0.0), oracle, epsilon = 1e-5);
        assert_abs_diff_eq!(e.curvature(0.0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fourier_curvature_at_left_point_matches_oracle() {
        let spec = CurveSpec::FourierRadial {
            center: [0.0, 0.0],
            r0: 1.0,
            cos: vec![0.0, 0.1],
            sin: vec![],
        };
        let oracle = curvature_oracle(&spec, PI, 1e-5);
        let c = BoundaryCurve::new(spec).unwrap();
        let site = locate_min(&c).unwrap();
        assert_abs_diff_eq!(site.s0, 0.0, epsilon = 1e-9);
        assert!((site.kappa0 - oracle).abs() < 1e-5 * oracle);
    }

    #[test]
    fn curvature_agrees_with_oracle_on_random_points() {
        use rand::{Rng, SeedableRng};
        let specs = [
            CurveSpec::Ellipse {
                center: [1.0, 2.0],
                a: 2.0,
                b: 1.0,
            },
            CurveSpec::FourierRadial {
                center: [0.0, 0.0],
                r0: 1.0,
                cos: vec![0.05, 0.1],
                sin: vec![0.0, 0.04],
            },
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for spec in specs {
            let c = BoundaryCurve::new(spec.clone()).unwrap();
            for _ in 0..100 {
                let s = rng.random_range(0.0..c.length());
                let phi = c.parameter_at(s);
                let oracle = curvature_oracle(&spec, phi, 1e-4);
                let k = c.curvature(s);
                assert!((k - oracle).abs() <= 1e-6 * k.abs().max(1e-3), "{k} vs {oracle}");
            }
        }
    }

    #[test]
    fn locate_min_unit_circle() {
        let site = locate_min(&circle([0.0, 0.0], 1.0)).unwrap();
        assert_abs_diff_eq!(site.x_min, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(site.a0[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(site.kappa0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn locate_min_translated_ellipse() {
        let e = BoundaryCurve::new(CurveSpec::Ellipse {
            center: [3.0, 0.0],
            a: 2.0,
            b: 1.0,
        })
        .unwrap();
        let site = locate_min(&e).unwrap();
        assert_abs_diff_eq!(site.x_min, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(site.a0[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(site.kappa0, 2.0, epsilon = 1e-9);
        let tangent = e.frame(site.s0).tangent;
        assert!(tangent[0].abs() < 1e-9);
    }

    #[test]
    fn flat_leftmost_contact_is_rejected() {
        // r = 1 - 0.2 cos 2phi has a quartic contact x = -0.8 + 0.3 u^4 at phi = pi.
        let c = BoundaryCurve::new(CurveSpec::FourierRadial {
            center: [0.0, 0.0],
            r0: 1.0,
            cos: vec![0.0, -0.2],
            sin: vec![],
        })
        .unwrap();
        assert!(matches!(
            locate_min(&c),
            Err(StarkError::NonPositiveCurvature { .. })
        ));
    }

    #[test]
    fn dented_symmetric_curve_has_two_minima() {
        let c = BoundaryCurve::new(CurveSpec::FourierRadial {
            center: [0.0, 0.0],
            r0: 1.0,
            cos: vec![0.0, -0.3],
            sin: vec![],
        })
        .unwrap();
        assert!(matches!(
            locate_min(&c),
            Err(StarkError::NonUniqueMinimum { .. })
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(BoundaryCurve::new(CurveSpec::Circle {
            center: [0.0, 0.0],
            radius: -1.0
        })
        .is_err());
        assert!(BoundaryCurve::new(CurveSpec::Ellipse {
            center: [0.0, 0.0],
            a: 1.0,
            b: 0.0
        })
        .is_err());
        assert!(BoundaryCurve::new(CurveSpec::FourierRadial {
            center: [0.0, 0.0],
            r0: 0.5,
            cos: vec![0.0, 0.7],
            sin: vec![]
        })
        .is_err());
    }

    #[test]
    fn self_intersection_sweep_detects_figure_eight() {
        let poly = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(polygon_self_intersects(&poly));
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(!polygon_self_intersects(&square));
    }

    #[test]
    fn curve_spec_json_form() {
        let spec: CurveSpec =
            serde_json::from_str(r#"{"kind":"ellipse","center":[0,0],"a":2.0,"b":1.0}"#).unwrap();
        assert_eq!(
            spec,
            CurveSpec::Ellipse {
                center: [0.0, 0.0],
                a: 2.0,
                b: 1.0
            }
        );
        let spec: CurveSpec = serde_json::from_str(
            r#"{"kind":"fourier-radial","center":[0,0],"r0":1.0,"cos":[0.0,0.1]}"#,
        )
        .unwrap();
        assert!(matches!(spec, CurveSpec::FourierRadial { .. }));
    }

    #[test]
    fn tubular_map_on_unit_circle() {
        let patch = TubularPatch::new(circle([0.0, 0.0], 1.0)).unwrap();
        let p = patch.tubular_map(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(p[0], -1.0, epsilon = 1e-14);
        let p = patch.tubular_map(0.0, 0.25).unwrap();
        assert_abs_diff_eq!(p[0], -0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
        let p = patch.tubular_map(0.1, 0.0).unwrap();
        assert_abs_diff_eq!(p[0], -(0.1f64).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], -0.9950042, epsilon = 1e-7);
        assert!(matches!(
            patch.tubular_map(0.0, 5.0),
            Err(StarkError::OutOfPatch { .. })
        ));
        assert!(patch.tubular_map(4.0, 0.1).is_err());
    }

    #[test]
    fn jacobian_weight_values() {
        let patch = TubularPatch::new(circle([0.0, 0.0], 1.0)).unwrap();
        assert_abs_diff_eq!(patch.jacobian_weight(0.3, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(patch.jacobian_weight(0.7, 0.25).unwrap(), 0.75, epsilon = 1e-12);
        let e = TubularPatch::new(
            BoundaryCurve::new(CurveSpec::Ellipse {
                center: [0.0, 0.0],
                a: 2.0,
                b: 1.0,
            })
            .unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(e.jacobian_weight(0.0, 0.1).unwrap(), 0.8, epsilon = 1e-9);
    }

    #[test]
    fn weight_stays_positive_on_validated_patch() {
        let e = TubularPatch::new(
            BoundaryCurve::new(CurveSpec::Ellipse {
                center: [0.0, 0.0],
                a: 2.0,
                b: 1.0,
            })
            .unwrap(),
        )
        .unwrap();
        let b = e.bounds();
        let kmax = e.curve().max_curvature();
        for k in 0..=20 {
            let s = b.half_width * (k as f64 / 10.0 - 1.0);
            let m = e.jacobian_weight(s, b.depth).unwrap();
            assert!(m >= 1.0 - kmax * b.depth - 1e-12 && m > 0.0);
        }
    }

    #[test]
    fn tau1_residual_on_unit_circle() {
        let patch = TubularPatch::new(circle([0.0, 0.0], 1.0)).unwrap();
        assert_abs_diff_eq!(patch.tau1_taylor_residual(0.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        let r = patch.tau1_taylor_residual(0.1, 0.0).unwrap();
        assert_abs_diff_eq!(r, -(0.1f64).cos() + 1.0 - 0.005, epsilon = 1e-13);
        assert_abs_diff_eq!(r, -4.1653e-6, epsilon = 1e-9);
        let mut s = 1e-1;
        while s > 2e-3 {
            let big = patch.tau1_taylor_residual(s, 0.0).unwrap().abs();
            let small = patch.tau1_taylor_residual(0.5 * s, 0.0).unwrap().abs();
            assert!(big / small >= 7.0, "ratio {} at s = {s}", big / small);
            s *= 0.5;
        }
    }

    #[test]
    fn tau1_remainder_is_cubic_on_asymmetric_curve() {
        // Least-squares slope of log|residual| against log s at t = 0.
        let c = BoundaryCurve::new(CurveSpec::FourierRadial {
            center: [0.0, 0.0],
            r0: 1.0,
            cos: vec![0.0, 0.08],
            sin: vec![0.0, 0.0, 0.05],
        })
        .unwrap();
        let patch = TubularPatch::new(c).unwrap();
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let s = 0.05 * 0.5f64.powi(k);
                (s.ln(), patch.tau1_taylor_residual(s, 0.0).unwrap().abs().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope >= 2.9, "slope {slope}");
        // the mixed t s^2 term
        let r = patch.tau1_taylor_residual(0.02, 0.02).unwrap().abs();
        assert!(r <= 5.0 * (0.02f64.powi(3) + 0.02 * 0.02 * 0.02));
    }

    #[test]
    fn translation_covariance() {
        let base = CurveSpec::Ellipse {
            center: [0.0, 0.0],
            a: 1.5,
            b: 1.0,
        };
        let s1 = locate_min(&BoundaryCurve::new(base.clone()).unwrap()).unwrap();
        let s2 = locate_min(&BoundaryCurve::new(base.translated(0.7, -2.0)).unwrap()).unwrap();
        assert_abs_diff_eq!(s2.x_min - s1.x_min, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(s2.kappa0, s1.kappa0, epsilon = 1e-12);
        assert_abs_diff_eq!(s2.s0, s1.s0, epsilon = 1e-12);
    }

    #[test]
    fn rotated_circle_center_keeps_curvature() {
        for k in 0..8 {
            let a = k as f64 * PI / 4.0;
            let c = circle([2.0 * a.cos(), 2.0 * a.sin()], 1.3);
            let site = locate_min(&c).unwrap();
            assert_abs_diff_eq!(site.kappa0, 1.0 / 1.3, epsilon = 1e-10);
        }
    }

    #[test]
    fn level_function_signs() {
        let e = BoundaryCurve::new(CurveSpec::Ellipse {
            center: [1.0, 0.0],
            a: 2.0,
            b: 1.0,
        })
        .unwrap();
        assert!(e.level([1.0, 0.0]) < 0.0);
        assert!(e.level([3.5, 0.0]) > 0.0);
        assert_abs_diff_eq!(e.level([-1.0, 0.0]), 0.0, epsilon = 1e-15);
        let (lo, hi) = e.bounding_box();
        assert!(lo[0] < -1.0 && hi[0] > 3.0 && lo[1] < -1.0 && hi[1] > 1.0);
    }
}
