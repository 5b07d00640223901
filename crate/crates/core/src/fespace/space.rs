use super::basis::{lattice, reference_basis, ReferenceBasis};
use super::quadrature::{QuadratureRule, TriangleRule};
use super::nodes_per_tet;
use crate::geom;
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, TET_FACES};
use crate::{Error, Mat3, Result, Vec3};
use std::collections::HashMap;
use std::sync::Arc;

/// Vector-valued continuous Lagrange space of degree `p`: three components
/// per node, global DOF index `3 * node + component`.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    lattice: Vec<[usize; 4]>,
    node_coords: Vec<Vec3>,
    cell_nodes: Vec<usize>,
    vertex_nodes: Vec<usize>,
    pattern: CsrMatrix,
}

/// Affine map `x = x₀ + J ξ` of one tet.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub origin: Vec3,
    pub jacobian: Mat3,
    pub det: f64,
    pub inv_jacobian_t: Mat3,
}

impl CellGeometry {
    pub fn new(coords: &[Vec3; 4]) -> Self {
        let jacobian = geom::from_columns(
            &geom::sub(&coords[1], &coords[0]),
            &geom::sub(&coords[2], &coords[0]),
            &geom::sub(&coords[3], &coords[0]),
        );
        let det = geom::det(&jacobian);
        let inv_jacobian_t = geom::transpose(&geom::inverse(&jacobian));
        Self {
            origin: coords[0],
            jacobian,
            det,
            inv_jacobian_t,
        }
    }

    pub fn map(&self, bary: &[f64; 4]) -> Vec3 {
        let xi = [bary[1], bary[2], bary[3]];
        geom::add(&self.origin, &geom::mat_vec(&self.jacobian, &xi))
    }

    pub fn physical_gradient(&self, reference: &[f64; 3]) -> Vec3 {
        geom::mat_vec(&self.inv_jacobian_t, reference)
    }
}

type NodeKey = [(usize, usize); 4];

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let lattice = lattice(degree);
        let npt = lattice.len();
        let mut keys: HashMap<NodeKey, usize> = HashMap::new();
        let mut node_coords = Vec::new();
        let mut cell_nodes = Vec::with_capacity(mesh.tets().len() * npt);
        let mut vertex_nodes = vec![usize::MAX; mesh.vertices().len()];
        for (t, tet) in mesh.tets().iter().enumerate() {
            let geo = CellGeometry::new(&mesh.tet_coords(t));
            for alpha in &lattice {
                let mut key: NodeKey = [(usize::MAX, 0); 4];
                for i in 0..4 {
                    key[i] = if alpha[i] > 0 { (tet[i], alpha[i]) } else { (usize::MAX, 0) };
                }
                key.sort_unstable();
                let next = node_coords.len();
                let node = *keys.entry(key).or_insert(next);
                if node == next {
                    let bary = alpha.map(|a| a as f64 / degree as f64);
                    node_coords.push(geo.map(&bary));
                }
                cell_nodes.push(node);
                if let Some(v) = alpha.iter().position(|&a| a == degree) {
                    vertex_nodes[tet[v]] = node;
                }
            }
        }

        let n_nodes = node_coords.len();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for cell in cell_nodes.chunks(npt) {
            for &a in cell {
                adjacency[a].extend_from_slice(cell);
            }
        }
        let mut row_ptr = Vec::with_capacity(3 * n_nodes + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
            for _ in 0..3 {
                for &j in adj.iter() {
                    col_idx.extend_from_slice(&[3 * j, 3 * j + 1, 3 * j + 2]);
                }
                row_ptr.push(col_idx.len());
            }
        }
        let pattern = CsrMatrix::zeros_with_pattern(3 * n_nodes, 3 * n_nodes, row_ptr, col_idx);

        debug_assert_eq!(npt, nodes_per_tet(degree));
        Ok(Self {
            mesh,
            degree,
            lattice,
            node_coords,
            cell_nodes,
            vertex_nodes,
            pattern,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.n_nodes()
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.lattice.len()
    }

    pub fn node_coords(&self) -> &[Vec3] {
        &self.node_coords
    }

    pub fn cell_nodes(&self, t: usize) -> &[usize] {
        let npt = self.nodes_per_cell();
        &self.cell_nodes[t * npt..(t + 1) * npt]
    }

    /// Node sitting on mesh vertex `v`.
    pub fn vertex_node(&self, v: usize) -> usize {
        self.vertex_nodes[v]
    }

    pub fn lattice(&self) -> &[[usize; 4]] {
        &self.lattice
    }

    pub fn geometry(&self, t: usize) -> CellGeometry {
        CellGeometry::new(&self.mesh.tet_coords(t))
    }

    /// Zero matrix with the full 3×3-block nodal pattern of this space.
    pub fn zero_matrix(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    /// Basis tabulated at the points of a volume rule.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Vec<ReferenceBasis> {
        rule.points
            .iter()
            .map(|p| reference_basis(self.degree, *p).expect("degree validated"))
            .collect()
    }

    /// Local cell indices of the nodes on the face opposite local vertex `opposite`.
    pub fn face_local_nodes(&self, opposite: usize) -> Vec<usize> {
        (0..self.lattice.len())
            .filter(|&i| self.lattice[i][opposite] == 0)
            .collect()
    }

    /// Tet barycentric coordinates of a triangle rule point on face `opposite`.
    pub fn face_point(opposite: usize, tri: &[f64; 3]) -> [f64; 4] {
        let mut bary = [0.0; 4];
        for (k, &local) in TET_FACES[opposite].iter().enumerate() {
            bary[local] = tri[k];
        }
        bary
    }

    /// Basis of the owning tet tabulated at a face rule's points.
    pub fn tabulate_face(&self, opposite: usize, rule: &TriangleRule) -> Vec<ReferenceBasis> {
        rule.points
            .iter()
            .map(|p| reference_basis(self.degree, Self::face_point(opposite, p)).expect("degree validated"))
            .collect()
    }

    /// Global node indices on boundary facet `f`.
    pub fn facet_nodes(&self, f: usize) -> Vec<usize> {
        let facet = &self.mesh.boundary_facets()[f];
        let cell = self.cell_nodes(facet.tet);
        self.face_local_nodes(facet.opposite)
            .into_iter()
            .map(|i| cell[i])
            .collect()
    }

    /// Nodal interpolant of a vector field.
    pub fn interpolate(&self, f: impl Fn(Vec3) -> Vec3) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_dofs());
        for x in &self.node_coords {
            out.extend_from_slice(&f(*x));
        }
        out
    }

    /// Value and gradient (`grad[i][j] = ∂uᵢ/∂xⱼ`) of a discrete field at a
    /// tabulated point of cell `t`.
    pub fn eval_at(
        &self,
        t: usize,
        geo: &CellGeometry,
        basis: &ReferenceBasis,
        field: &[f64],
    ) -> (Vec3, Mat3) {
        let mut value = [0.0; 3];
        let mut grad = [[0.0; 3]; 3];
        for (a, &node) in self.cell_nodes(t).iter().enumerate() {
            let g = geo.physical_gradient(&basis.gradients[a]);
            let phi = basis.values[a];
            for i in 0..3 {
                let u = field[3 * node + i];
                value[i] += phi * u;
                for j in 0..3 {
                    grad[i][j] += u * g[j];
                }
            }
        }
        (value, grad)
    }
}
