//! Discrete stand-in for W^{1,H}_0 on box domains: Kuhn-split simplicial
//! meshes, P1 functions with zero boundary trace, quadrature and exports.

mod export;
mod function;
mod mesh;
mod quadrature;

pub use export::{read_csv, write_csv, write_vtk};
pub use function::{integrate, lp_norm, lp_norm_with, w1p0f_norm, FeFunction};
pub use mesh::{build_mesh, BoxMesh};
pub use quadrature::QuadratureRule;
