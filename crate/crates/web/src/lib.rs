//! Browser demo: pick a boundary, compare the expansion with the patch
//! solver, and draw the ground-state density inside the domain.
//!
//! The `demo_*` functions are plain Rust so they run in native tests; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use stark_core::asymptotics::predict_lambda;
use stark_core::geometry::{BoundaryCurve, CurveSpec, TubularPatch};
use stark_core::pipeline::{solve_patch, PatchSolveOptions};
use wasm_bindgen::prelude::*;

/// Largest mode count the page offers; keeps solves interactive.
pub const MAX_DEMO_MODES: usize = 6;
/// Smallest `h` the page accepts.
pub const MIN_DEMO_H: f64 = 0.02;

fn patch(spec_json: &str) -> Result<TubularPatch, String> {
    let spec: CurveSpec = serde_json::from_str(spec_json).map_err(|e| format!("domain: {e}"))?;
    let curve = BoundaryCurve::new(spec).map_err(|e| e.to_string())?;
    TubularPatch::new(curve).map_err(|e| e.to_string())
}

fn check(h: f64, n: usize) -> Result<(), String> {
    if !(MIN_DEMO_H..=0.2).contains(&h) {
        return Err(format!("h must lie in [{MIN_DEMO_H}, 0.2]"));
    }
    if n == 0 || n > MAX_DEMO_MODES {
        return Err(format!("n must lie in 1..={MAX_DEMO_MODES}"));
    }
    Ok(())
}

/// Boundary samples `[x0, y0, x1, y1, ...]` followed by the site `A0`.
pub fn demo_outline(spec_json: &str, samples: usize) -> Result<Vec<f64>, String> {
    let p = patch(spec_json)?;
    let c = p.curve();
    let l = c.length();
    let mut out = Vec::with_capacity(2 * samples + 2);
    for k in 0..samples {
        let q = c.evaluate(l * k as f64 / samples as f64);
        out.extend(q);
    }
    out.extend(p.min_site().a0);
    Ok(out)
}

/// `[x_min, kappa0, lambda_1, ..., lambda_n]` from the three-term expansion.
pub fn demo_predict(spec_json: &str, h: f64, n: usize) -> Result<Vec<f64>, String> {
    check(h, n)?;
    let p = patch(spec_json)?;
    let site = p.min_site();
    let mut out = vec![site.x_min, site.kappa0];
    for k in 1..=n {
        out.push(predict_lambda(k, h, site).map_err(|e| e.to_string())?.total);
    }
    Ok(out)
}

/// Patch-solver eigenvalues, one solve without refinement to stay fast.
pub fn demo_solve(spec_json: &str, h: f64, n: usize) -> Result<Vec<f64>, String> {
    check(h, n)?;
    let p = patch(spec_json)?;
    let opts = PatchSolveOptions {
        richardson: false,
        ..Default::default()
    };
    let r = solve_patch(&p, h, n, &opts).map_err(|e| e.to_string())?;
    Ok(r.eigenvalues)
}

/// Density of mode `n` as triples `[x, y, rho, ...]` in the plane, `rho`
/// scaled to a peak of 1.
pub fn demo_density(spec_json: &str, h: f64, n: usize) -> Result<Vec<f64>, String> {
    check(h, n)?;
    let p = patch(spec_json)?;
    let opts = PatchSolveOptions {
        richardson: false,
        ..Default::default()
    };
    let r = solve_patch(&p, h, n, &opts).map_err(|e| e.to_string())?;
    let v = &r.coarse.eigenvectors[n - 1];
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x * x));
    let mut out = Vec::with_capacity(3 * v.len());
    for (k, val) in v.iter().enumerate() {
        let (i, j) = r.grid.coords(k);
        let q = p.tubular_map(r.grid.s(i), r.grid.t(j)).map_err(|e| e.to_string())?;
        out.extend([q[0], q[1], val * val / peak]);
    }
    Ok(out)
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn outline(spec_json: &str, samples: usize) -> Result<Vec<f64>, JsError> {
    js(demo_outline(spec_json, samples))
}

#[wasm_bindgen]
pub fn predict(spec_json: &str, h: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(demo_predict(spec_json, h, n))
}

#[wasm_bindgen]
pub fn solve(spec_json: &str, h: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(demo_solve(spec_json, h, n))
}

#[wasm_bindgen]
pub fn density(spec_json: &str, h: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(demo_density(spec_json, h, n))
}
