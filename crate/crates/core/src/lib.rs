//! Dirichlet spectrum of the semiclassical Stark operator `-h^2 Laplacian + x`
//! on smooth planar domains, with the three-term low-lying expansion
//! `lambda_n = x_min + z1 h^(2/3) + (2n - 1) h sqrt(kappa0 / 2) + O(h^(4/3))`
//! and the tools needed to check it numerically.

pub mod assembly;
pub mod asymptotics;
pub mod diagnostics;
pub mod eigensolve;
pub mod error;
pub mod geometry;
pub mod model1d;
pub mod pipeline;
pub mod quad;
pub mod quasimode;
pub mod sparse;
pub mod specfun;

pub use error::{Result, StarkError};
