//! Essential boundary conditions: fully prescribed (Dirichlet) nodes and
//! slip nodes whose DOF triplet is rotated into a local `(n, t1, t2)` frame
//! with only the normal component prescribed.

use super::FeSpace;
use crate::geom;
use crate::linalg::{CsrMatrix, SolverSettings, SpdSolver};
use crate::mesh::{BoundaryKind, BoundaryTag};
use crate::{Error, Mat3, Result, Vec3};

/// Time-dependent data on the constrained boundary parts. Defaults are zero.
pub trait BoundaryData {
    fn dirichlet(&self, _label: &str, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    fn dirichlet_rate(&self, _label: &str, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    /// Prescribed `u · n` on slip nodes; `n` is the outward nodal normal.
    fn normal_displacement(&self, _label: &str, _x: Vec3, _n: Vec3, _t: f64) -> f64 {
        0.0
    }

    fn normal_velocity(&self, _label: &str, _x: Vec3, _n: Vec3, _t: f64) -> f64 {
        0.0
    }
}

/// Homogeneous data everywhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoBoundaryData;

impl BoundaryData for NoBoundaryData {}

#[derive(Clone, Debug, PartialEq)]
enum NodeKind {
    Free,
    Dirichlet(usize),
    Slip(usize),
}

#[derive(Clone, Debug)]
pub struct Constraints {
    kinds: Vec<NodeKind>,
    labels: Vec<String>,
    frames: Vec<Option<Mat3>>,
    free_map: Vec<Option<usize>>,
    n_free: usize,
}

impl Constraints {
    /// No constrained DOFs.
    pub fn free(space: &FeSpace) -> Self {
        let n = space.n_nodes();
        let mut c = Self {
            kinds: vec![NodeKind::Free; n],
            labels: Vec::new(),
            frames: vec![None; n],
            free_map: Vec::new(),
            n_free: 0,
        };
        c.rebuild_maps();
        c
    }

    /// Constrains all components on the nodes of Dirichlet facets whose tag
    /// passes `select`. Overrides slip constraints on shared nodes.
    pub fn apply_dirichlet(mut self, space: &FeSpace, select: impl Fn(&BoundaryTag) -> bool) -> Self {
        let mesh = space.mesh();
        for (f, facet) in mesh.boundary_facets().iter().enumerate() {
            if facet.tag.kind != BoundaryKind::Dirichlet || !select(&facet.tag) {
                continue;
            }
            let label = self.label_id(&facet.tag.label);
            for node in space.facet_nodes(f) {
                if !matches!(self.kinds[node], NodeKind::Dirichlet(_)) {
                    self.kinds[node] = NodeKind::Dirichlet(label);
                    self.frames[node] = None;
                }
            }
        }
        self.rebuild_maps();
        self
    }

    /// Constrains the normal component on the nodes of slip facets whose tag
    /// passes `select`. Nodal normals are area-weighted averages of the
    /// adjacent facet normals.
    pub fn apply_slip(mut self, space: &FeSpace, select: impl Fn(&BoundaryTag) -> bool) -> Result<Self> {
        let mesh = space.mesh();
        let mut normals: Vec<Option<(Vec3, usize)>> = vec![None; space.n_nodes()];
        for (f, facet) in mesh.boundary_facets().iter().enumerate() {
            if facet.tag.kind != BoundaryKind::Slip || !select(&facet.tag) {
                continue;
            }
            let label = self.label_id(&facet.tag.label);
            let weighted = geom::scale(&mesh.boundary_normal(f), mesh.facet_area(f));
            for node in space.facet_nodes(f) {
                let entry = normals[node].get_or_insert(([0.0; 3], label));
                entry.0 = geom::add(&entry.0, &weighted);
            }
        }
        for (node, entry) in normals.into_iter().enumerate() {
            let Some((sum, label)) = entry else { continue };
            if matches!(self.kinds[node], NodeKind::Dirichlet(_)) {
                continue;
            }
            let len = geom::norm(&sum);
            if !(len > 1e-300) || !len.is_finite() {
                return Err(Error::DegenerateNormal(node));
            }
            let n = geom::scale(&sum, 1.0 / len);
            let (t1, t2) = geom::orthonormal_frame(&n);
            self.kinds[node] = NodeKind::Slip(label);
            self.frames[node] = Some(geom::from_columns(&n, &t1, &t2));
        }
        self.rebuild_maps();
        Ok(self)
    }

    fn label_id(&mut self, label: &str) -> usize {
        if let Some(i) = self.labels.iter().position(|l| l == label) {
            i
        } else {
            self.labels.push(label.to_string());
            self.labels.len() - 1
        }
    }

    fn rebuild_maps(&mut self) {
        let mut free_map = Vec::with_capacity(3 * self.kinds.len());
        let mut n_free = 0;
        for kind in &self.kinds {
            for comp in 0..3 {
                let fixed = match kind {
                    NodeKind::Free => false,
                    NodeKind::Dirichlet(_) => true,
                    NodeKind::Slip(_) => comp == 0,
                };
                if fixed {
                    free_map.push(None);
                } else {
                    free_map.push(Some(n_free));
                    n_free += 1;
                }
            }
        }
        self.free_map = free_map;
        self.n_free = n_free;
    }

    pub fn n_dofs(&self) -> usize {
        self.free_map.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// `Some(free index)` for free DOFs in rotated coordinates.
    pub fn free_map(&self) -> &[Option<usize>] {
        &self.free_map
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.free_map[dof].is_none()
    }

    pub fn frames(&self) -> &[Option<Mat3>] {
        &self.frames
    }

    /// Columns `(n, t1, t2)` of the slip frame at `node`.
    pub fn frame(&self, node: usize) -> Option<&Mat3> {
        self.frames[node].as_ref()
    }

    pub fn is_slip(&self, node: usize) -> bool {
        matches!(self.kinds[node], NodeKind::Slip(_))
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        matches!(self.kinds[node], NodeKind::Dirichlet(_))
    }

    pub fn has_rotations(&self) -> bool {
        self.frames.iter().any(Option::is_some)
    }

    /// Cartesian to rotated coordinates, `y = Tᵀ x`.
    pub fn to_rotated(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (node, frame) in self.frames.iter().enumerate() {
            if let Some(r) = frame {
                let v = [x[3 * node], x[3 * node + 1], x[3 * node + 2]];
                for a in 0..3 {
                    y[3 * node + a] = r[0][a] * v[0] + r[1][a] * v[1] + r[2][a] * v[2];
                }
            }
        }
        y
    }

    /// Rotated to Cartesian coordinates, `x = T y`.
    pub fn from_rotated(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for (node, frame) in self.frames.iter().enumerate() {
            if let Some(r) = frame {
                let v = [y[3 * node], y[3 * node + 1], y[3 * node + 2]];
                for a in 0..3 {
                    x[3 * node + a] = geom::dot(&r[a], &v);
                }
            }
        }
        x
    }

    fn prescribed(
        &self,
        space: &FeSpace,
        dirichlet: impl Fn(&str, Vec3) -> Vec3,
        normal: impl Fn(&str, Vec3, Vec3) -> f64,
    ) -> Vec<f64> {
        let mut y = vec![0.0; self.n_dofs()];
        for (node, kind) in self.kinds.iter().enumerate() {
            let x = space.node_coords()[node];
            match kind {
                NodeKind::Free => {}
                NodeKind::Dirichlet(l) => {
                    let v = dirichlet(&self.labels[*l], x);
                    y[3 * node..3 * node + 3].copy_from_slice(&v);
                }
                NodeKind::Slip(l) => {
                    let r = self.frames[node].as_ref().unwrap();
                    let n = [r[0][0], r[1][0], r[2][0]];
                    y[3 * node] = normal(&self.labels[*l], x, n);
                }
            }
        }
        y
    }

    /// Prescribed displacement values at time `t`, in rotated coordinates.
    /// Entries of free DOFs are zero.
    pub fn prescribed_displacement(&self, space: &FeSpace, data: &dyn BoundaryData, t: f64) -> Vec<f64> {
        self.prescribed(
            space,
            |l, x| data.dirichlet(l, x, t),
            |l, x, n| data.normal_displacement(l, x, n, t),
        )
    }

    /// Prescribed velocity values at time `t`, in rotated coordinates.
    pub fn prescribed_velocity(&self, space: &FeSpace, data: &dyn BoundaryData, t: f64) -> Vec<f64> {
        self.prescribed(
            space,
            |l, x| data.dirichlet_rate(l, x, t),
            |l, x, n| data.normal_velocity(l, x, n, t),
        )
    }

    /// Overwrites the constrained entries of a rotated vector with `values`.
    pub fn impose(&self, rotated: &mut [f64], values: &[f64]) {
        for (dof, map) in self.free_map.iter().enumerate() {
            if map.is_none() {
                rotated[dof] = values[dof];
            }
        }
    }
}

/// A symmetric system with constraints eliminated symmetrically and the
/// free-free block prepared for repeated solves.
#[derive(Debug)]
pub struct ConstrainedSystem {
    constraints: Constraints,
    rotated: CsrMatrix,
    solver: SpdSolver,
}

impl ConstrainedSystem {
    pub fn new(matrix: &CsrMatrix, constraints: &Constraints, settings: &SolverSettings) -> Result<Self> {
        let rotated = if constraints.has_rotations() {
            matrix.rotate_nodal_blocks(constraints.frames())
        } else {
            matrix.clone()
        };
        let reduced = rotated.principal_submatrix(constraints.free_map(), constraints.n_free());
        let solver = SpdSolver::new(reduced, settings)?;
        Ok(Self {
            constraints: constraints.clone(),
            rotated,
            solver,
        })
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    /// `Tᵀ A T`
    pub fn rotated_matrix(&self) -> &CsrMatrix {
        &self.rotated
    }

    /// Solves `A x = rhs` on free rows with the constrained components of `x`
    /// (rotated coordinates) set to `prescribed`. Works in rotated coordinates
    /// throughout: `rhs_rot = Tᵀ rhs`, result `y` with `x = T y`.
    pub fn solve_rotated(&self, rhs_rot: &[f64], prescribed: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let c = &self.constraints;
        let mut lifted = vec![0.0; c.n_dofs()];
        c.impose(&mut lifted, prescribed);
        let coupling = self.rotated.mul_vec(&lifted);
        let mut b = vec![0.0; c.n_free()];
        let mut x = vec![0.0; c.n_free()];
        for (dof, map) in c.free_map().iter().enumerate() {
            if let Some(i) = map {
                b[*i] = rhs_rot[dof] - coupling[dof];
                if let Some(g) = guess {
                    x[*i] = g[dof];
                }
            }
        }
        self.solver.solve_into(&b, &mut x)?;
        let mut y = lifted;
        for (dof, map) in c.free_map().iter().enumerate() {
            if let Some(i) = map {
                y[dof] = x[*i];
            }
        }
        Ok(y)
    }

    /// Cartesian convenience wrapper around [`Self::solve_rotated`].
    pub fn solve(&self, rhs: &[f64], prescribed: &[f64]) -> Result<Vec<f64>> {
        let rhs_rot = self.constraints.to_rotated(rhs);
        let y = self.solve_rotated(&rhs_rot, prescribed, None)?;
        Ok(self.constraints.from_rotated(&y))
    }
}
