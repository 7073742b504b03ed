//! Numerics for singular Finsler double phase problems on box domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`minkowski`]: Minkowski norms (Euclidean, Riemannian, Randers), their
//!   derivatives, the uniformity constant l_F and the convexity inequalities.
//! * [`fespace`]: Kuhn-split box meshes, P1 functions with zero trace,
//!   quadrature and exports.
//! * [`musielak`]: double phase modulars and Luxemburg norms.
//! * [`energy`]: the energy J_λ, the double phase operator and residuals.
//! * [`thresholds`]: κ_{p*}, σ*, Λ(s), s_max and λ*.
//! * [`solver`]: projected gradient descent on the ball B_σ.
//! * [`config`] and [`pipeline`]: experiment configuration and orchestration.
//!
//! Loops over simplices and samples run on rayon when the `parallel`
//! feature is enabled (the default); results do not depend on it.

pub mod config;
pub mod energy;
pub mod error;
pub mod fespace;
pub mod minkowski;
pub mod musielak;
pub mod par;
pub mod pipeline;
pub mod solver;
pub mod thresholds;

pub use error::{Error, Result};
