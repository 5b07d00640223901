//! Continuous Lagrange spaces of degree 1–3 on tetrahedral meshes.

mod basis;
mod constraints;
mod quadrature;
mod space;

pub use basis::{lattice, reference_basis, ReferenceBasis};
pub use constraints::{BoundaryData, ConstrainedSystem, Constraints, NoBoundaryData};
pub use quadrature::{quadrature, triangle_quadrature, QuadratureRule, TriangleRule, MAX_DEGREE as MAX_QUADRATURE_DEGREE};
pub use space::{CellGeometry, FeSpace};

/// Number of Lagrange nodes on one tetrahedron.
pub fn nodes_per_tet(p: usize) -> usize {
    (p + 1) * (p + 2) * (p + 3) / 6
}
