use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stark_core::asymptotics::{h_from_physical, PhysicalParams};
use stark_core::eigensolve::{InnerSolver, DEFAULT_TOLERANCE, MIN_TOLERANCE};
use stark_core::geometry::CurveSpec;

use crate::CliError;

/// The default sweep, one decade in `h`.
pub const DEFAULT_H_GRID: [f64; 6] = [0.05, 0.03, 0.02, 0.01, 0.007, 0.005];
pub const MAX_VERIFY_MODES: usize = 16;

/// One JSON document drives every subcommand. Unknown keys are rejected so
/// that typos do not silently fall back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: CurveSpec,
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    #[serde(default)]
    pub physical: Option<Vec<PhysicalParams>>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(rename = "c_T", default = "default_c_t")]
    pub c_t: f64,
    #[serde(default = "default_points_per_scale")]
    pub points_per_scale: f64,
    #[serde(default = "default_s_scales")]
    pub s_scales: f64,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    #[serde(default = "default_true")]
    pub richardson: bool,
    #[serde(default)]
    pub inner_solver: InnerSolver,
    #[serde(default)]
    pub fullgrid: bool,
    /// Full-grid spacing; `None` means `h^{2/3} / 10`.
    #[serde(default)]
    pub fullgrid_spacing: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_eta")]
    pub eta_radius: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_cutoff_scale")]
    pub cutoff_scale: f64,
    /// Remainder constant used by the verify verdict.
    #[serde(default = "default_remainder_c")]
    pub remainder_c: f64,
    #[serde(default)]
    pub write_eigenvectors: bool,
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_n_max() -> usize {
    4
}
fn default_c_t() -> f64 {
    20.0
}
fn default_points_per_scale() -> f64 {
    12.0
}
fn default_s_scales() -> f64 {
    6.0
}
fn default_eig_tol() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_true() -> bool {
    true
}
fn default_epsilon() -> f64 {
    stark_core::diagnostics::DEFAULT_EPSILON
}
fn default_eta() -> f64 {
    0.2
}
fn default_theta() -> f64 {
    stark_core::quasimode::DEFAULT_THETA
}
fn default_cutoff_scale() -> f64 {
    stark_core::quasimode::DEFAULT_CUTOFF_SCALE
}
fn default_remainder_c() -> f64 {
    1.5
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.h.is_some() && self.physical.is_some() {
            return Err(invalid("give either \"h\" or \"physical\", not both"));
        }
        if let Some(ps) = &self.physical {
            if ps.is_empty() {
                return Err(invalid("\"physical\" is empty"));
            }
            for p in ps {
                p.validate().map_err(|e| invalid(e.to_string()))?;
            }
        }
        let hs = self.h_grid()?;
        if hs.is_empty() {
            return Err(invalid("h grid is empty"));
        }
        for (k, &h) in hs.iter().enumerate() {
            if !(h.is_finite() && h > 0.0) {
                return Err(invalid(format!("h = {h} must be positive")));
            }
            if hs[..k].contains(&h) {
                return Err(invalid(format!("h = {h} is repeated")));
            }
        }
        if self.n_max == 0 || self.n_max > stark_core::eigensolve::MAX_EIGENPAIRS - 1 {
            return Err(invalid(format!("n_max = {} outside 1..=31", self.n_max)));
        }
        let positive = [
            ("c_T", self.c_t),
            ("points_per_scale", self.points_per_scale),
            ("s_scales", self.s_scales),
            ("eta_radius", self.eta_radius),
            ("cutoff_scale", self.cutoff_scale),
            ("remainder_c", self.remainder_c),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} = {v} must be positive")));
            }
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid(format!("delta = {d} must be positive")));
            }
        }
        if let Some(a) = self.fullgrid_spacing {
            if !(a.is_finite() && a > 0.0) {
                return Err(invalid(format!("fullgrid_spacing = {a} must be positive")));
            }
        }
        if !(self.eig_tol >= MIN_TOLERANCE && self.eig_tol < 1.0) {
            return Err(invalid(format!("eig_tol = {} outside [{MIN_TOLERANCE:e}, 1)", self.eig_tol)));
        }
        if self.parallelism == Some(0) {
            return Err(invalid("parallelism must be at least 1"));
        }
        // Curve errors (negative radius and the like) surface here, before
        // any subcommand runs.
        stark_core::geometry::BoundaryCurve::new(self.domain.clone()).map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Explicit `h` list, else the values implied by `physical`, else the
    /// default grid.
    pub fn h_grid(&self) -> Result<Vec<f64>, CliError> {
        if let Some(h) = &self.h {
            return Ok(h.clone());
        }
        if let Some(ps) = &self.physical {
            return ps
                .iter()
                .map(|p| h_from_physical(p).map_err(|e| invalid(e.to_string())))
                .collect();
        }
        Ok(DEFAULT_H_GRID.to_vec())
    }

    /// SHA-256 of the canonical serialization, defaults filled in. The
    /// output directory is excluded so that moving outputs keeps the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let canon = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0}}"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(CIRCLE).unwrap();
        assert_eq!(c.h_grid().unwrap(), DEFAULT_H_GRID.to_vec());
        assert_eq!(c.n_max, 4);
        assert_eq!(c.eig_tol, 1e-10);
        assert!(c.richardson && !c.fullgrid);
    }

    #[test]
    fn hash_ignores_output_dir_and_formatting() {
        let a = RunConfig::parse(CIRCLE).unwrap();
        let b = RunConfig::parse(
            r#"{ "output_dir": "elsewhere",
                 "domain": {"radius": 1.0, "kind": "circle", "center": [0.0, 0.0]} }"#,
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = RunConfig::parse(r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"n_max":3}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cases = [
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":-1.0}}"#,
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"h":[0.01,0.01]}"#,
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"h":[-0.01]}"#,
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"n_max":0}"#,
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"eig_tol":1e-14}"#,
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"typo":1}"#,
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},"physical":[{"hbar":1,"mass":1,"charge":-1,"field":1}]}"#,
            r#"not json"#,
        ];
        for text in cases {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Validation(_))), "{text}");
        }
    }

    #[test]
    fn physical_list_sets_h() {
        let c = RunConfig::parse(
            r#"{"domain":{"kind":"circle","center":[0,0],"radius":1.0},
                "physical":[{"hbar":1.0,"mass":0.5,"charge":1.0,"field":400.0}]}"#,
        )
        .unwrap();
        let h = c.h_grid().unwrap()[0];
        assert!((h - 0.05).abs() < 1e-12, "{h}");
    }
}
