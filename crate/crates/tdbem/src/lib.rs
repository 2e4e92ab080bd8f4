//! Time-domain boundary element solver for electromagnetic scattering from
//! obstacles carrying a power-law impedance boundary condition.
//!
//! Space is discretized with lowest-order Raviart-Thomas boundary elements on
//! closed triangle meshes, time with Radau IIA Runge-Kutta convolution
//! quadrature; exterior fields are reconstructed through discrete
//! representation formulas.

pub mod kernels;
pub mod mesh;
pub mod quad;
pub mod nonlin;
pub mod rt;
pub mod smallc;
pub mod cq;

pub use mesh::{load_mesh, make_cube_mesh, MeshFormat, SurfaceMesh};
