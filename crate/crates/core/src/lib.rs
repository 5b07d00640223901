//! Finite element simulation of linear viscoelastic solids described by the
//! generalized Maxwell (Wiechert) model.
//!
//! Space is discretized with continuous Lagrange tetrahedra of degree 1 to 3,
//! time with continuous piecewise linear trial and piecewise constant test
//! functions. The Maxwell internal variables are eliminated in every step so
//! that a single symmetric positive definite system in the velocity remains;
//! they are then reconstructed with a closed-form update.
//!
//! Module map:
//! - [`mesh`]: structured tetrahedral meshes with tagged boundary facets
//! - [`fespace`]: Lagrange bases, quadrature, DOF numbering, constraints
//! - [`assembly`]: mass, elastic, deviatoric operators and loads
//! - [`material`]: Maxwell material parameters and single-point oracles
//! - [`dynamics`]: the time stepping schemes and the energy ledger
//! - [`verify`]: manufactured solution, error norms, convergence studies,
//!   and the conservation experiment
//! - [`seal`]: the radial shaft seal model and contact pressure recovery
//! - [`io`]: VTK and CSV output

pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod fespace;
mod geom;
pub mod io;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod seal;
pub mod stress;
pub mod verify;

pub use error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
