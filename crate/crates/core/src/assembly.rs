//! Global operators and load vectors of the weak form.
//!
//! Matrices share the nodal 3×3-block pattern of [`FeSpace::zero_matrix`],
//! so they can be combined entrywise with [`CsrMatrix::linear_combination`].

use crate::fespace::{quadrature, triangle_quadrature, FeSpace, QuadratureRule};
use crate::linalg::CsrMatrix;
use crate::mesh::BoundaryKind;
use crate::Vec3;

/// Body force and boundary traction data. Both default to zero.
pub trait LoadSpec: Sync {
    /// Body force density `f(x, t)`.
    fn body_force(&self, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    /// Traction `g(x, t)` on Neumann facets; `n` is the outward unit normal.
    fn traction(&self, _label: &str, _x: Vec3, _n: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }

    fn has_body_force(&self) -> bool {
        true
    }

    fn has_traction(&self) -> bool {
        true
    }

    /// Precomputed `∫_{t_prev}^{t_next} F(t) dt` for loads that can provide it
    /// cheaply; `None` falls back to quadrature in time.
    fn time_integral(&self, _t_prev: f64, _t_next: f64) -> Option<Vec<f64>> {
        None
    }
}

/// No external loads.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoLoads;

impl LoadSpec for NoLoads {
    fn has_body_force(&self) -> bool {
        false
    }

    fn has_traction(&self) -> bool {
        false
    }
}

/// Volume/facet quadrature degree used for loads when none is configured.
pub fn default_load_degree(p: usize) -> usize {
    (2 * p + 3).min(crate::fespace::MAX_QUADRATURE_DEGREE)
}

fn scatter(matrix: &mut CsrMatrix, nodes: &[usize], local: &[f64]) {
    let m = 3 * nodes.len();
    let values_offset: Vec<Vec<usize>> = nodes
        .iter()
        .map(|&na| {
            nodes
                .iter()
                .flat_map(|&nb| {
                    (0..3).map(move |i| (3 * na + i, 3 * nb))
                })
                .map(|(r, c)| matrix.find(r, c).expect("nodal block outside pattern"))
                .collect()
        })
        .collect();
    let values = matrix.values_mut();
    for (a, offsets) in values_offset.iter().enumerate() {
        for (b, _) in nodes.iter().enumerate() {
            for i in 0..3 {
                let pos = offsets[3 * b + i];
                let row = (3 * a + i) * m + 3 * b;
                for j in 0..3 {
                    values[pos + j] += local[row + j];
                }
            }
        }
    }
}

/// Mass matrix `wᵀ M v = ρ ∫ w · v`.
pub fn assemble_mass(space: &FeSpace, density: f64) -> CsrMatrix {
    let rule = quadrature(2 * space.degree()).expect("degree within range");
    let tab = space.tabulate(&rule);
    let npc = space.nodes_per_cell();
    let m = 3 * npc;
    let mut matrix = space.zero_matrix();
    let mut local = vec![0.0; m * m];
    for t in 0..space.mesh().tets().len() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let jac = space.geometry(t).det.abs();
        for (q, basis) in tab.iter().enumerate() {
            let w = density * rule.weights[q] * jac;
            for a in 0..npc {
                for b in 0..npc {
                    let v = w * basis.values[a] * basis.values[b];
                    for i in 0..3 {
                        local[(3 * a + i) * m + 3 * b + i] += v;
                    }
                }
            }
        }
        scatter(&mut matrix, space.cell_nodes(t), &local);
    }
    matrix
}

/// Generic isotropic strain form
/// `wᵀ K v = ∫ c_eps ε(w):ε(v) + c_div (∇·w)(∇·v)`.
pub fn assemble_strain_form(space: &FeSpace, c_eps: f64, c_div: f64) -> CsrMatrix {
    let degree = 2 * (space.degree() - 1);
    let rule = quadrature(degree).expect("degree within range");
    let tab = space.tabulate(&rule);
    let npc = space.nodes_per_cell();
    let m = 3 * npc;
    let mut matrix = space.zero_matrix();
    let mut local = vec![0.0; m * m];
    let mut grads = vec![[0.0; 3]; npc];
    for t in 0..space.mesh().tets().len() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let geo = space.geometry(t);
        for (q, basis) in tab.iter().enumerate() {
            let w = rule.weights[q] * geo.det.abs();
            for (g, r) in grads.iter_mut().zip(&basis.gradients) {
                *g = geo.physical_gradient(r);
            }
            for a in 0..npc {
                let ga = grads[a];
                for b in 0..npc {
                    let gb = grads[b];
                    let gg = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
                    for i in 0..3 {
                        let row = (3 * a + i) * m + 3 * b;
                        for j in 0..3 {
                            let mut v = 0.5 * c_eps * ga[j] * gb[i] + c_div * ga[i] * gb[j];
                            if i == j {
                                v += 0.5 * c_eps * gg;
                            }
                            local[row + j] += w * v;
                        }
                    }
                }
            }
        }
        scatter(&mut matrix, space.cell_nodes(t), &local);
    }
    matrix
}

/// Elastic stiffness `a_E(w, v) = ∫ 2μ ε(w):ε(v) + λ (∇·w)(∇·v)`.
pub fn assemble_elastic(space: &FeSpace, mu: f64, lambda: f64) -> CsrMatrix {
    assemble_strain_form(space, 2.0 * mu, lambda)
}

/// Deviatoric stiffness `κ ∫ e(w):e(v)` with `e` the strain deviator.
pub fn assemble_deviatoric(space: &FeSpace, kappa: f64) -> CsrMatrix {
    assemble_strain_form(space, kappa, -kappa / 3.0)
}

/// `∫_Ω f(x, t) · v` with a volume rule of the given exactness degree.
pub fn assemble_body_load(space: &FeSpace, loads: &dyn LoadSpec, t: f64, degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs()];
    if !loads.has_body_force() {
        return out;
    }
    let rule: QuadratureRule = quadrature(degree).expect("load degree within range");
    let tab = space.tabulate(&rule);
    for cell in 0..space.mesh().tets().len() {
        let geo = space.geometry(cell);
        let nodes = space.cell_nodes(cell);
        for (q, basis) in tab.iter().enumerate() {
            let x = geo.map(&rule.points[q]);
            let f = loads.body_force(x, t);
            let w = rule.weights[q] * geo.det.abs();
            for (a, &node) in nodes.iter().enumerate() {
                let phi = w * basis.values[a];
                for i in 0..3 {
                    out[3 * node + i] += phi * f[i];
                }
            }
        }
    }
    out
}

/// `∫_{Γ_N} g(x, t) · v` over all Neumann facets.
pub fn assemble_traction_load(space: &FeSpace, loads: &dyn LoadSpec, t: f64, degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs()];
    if !loads.has_traction() {
        return out;
    }
    let rule = triangle_quadrature(degree).expect("load degree within range");
    let face_tabs: Vec<_> = (0..4).map(|o| space.tabulate_face(o, &rule)).collect();
    let mesh = space.mesh();
    for (f, facet) in mesh.boundary_facets().iter().enumerate() {
        if facet.tag.kind != BoundaryKind::Neumann {
            continue;
        }
        let n = mesh.boundary_normal(f);
        let scale = 2.0 * mesh.facet_area(f);
        let geo = space.geometry(facet.tet);
        let nodes = space.cell_nodes(facet.tet);
        let local = space.face_local_nodes(facet.opposite);
        for (q, tri) in rule.points.iter().enumerate() {
            let x = geo.map(&FeSpace::face_point(facet.opposite, tri));
            let g = loads.traction(&facet.tag.label, x, n, t);
            let w = rule.weights[q] * scale;
            let basis = &face_tabs[facet.opposite][q];
            for &a in &local {
                let phi = w * basis.values[a];
                let node = nodes[a];
                for i in 0..3 {
                    out[3 * node + i] += phi * g[i];
                }
            }
        }
    }
    out
}

/// Load functional `F(t)` with `vᵀF = ∫_Ω f·v + ∫_{Γ_N} g·v`.
pub fn assemble_load(space: &FeSpace, loads: &dyn LoadSpec, t: f64, degree: usize) -> Vec<f64> {
    let mut out = assemble_body_load(space, loads, t, degree);
    let g = assemble_traction_load(space, loads, t, degree);
    for (o, v) in out.iter_mut().zip(&g) {
        *o += v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_unit_cube, BoundaryTag, BoxFace};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn cube_space(n: usize, p: usize) -> FeSpace {
        FeSpace::new(Arc::new(build_unit_cube(n).unwrap()), p).unwrap()
    }

    fn random_field(space: &FeSpace, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn constant_field_mass() {
        let space = cube_space(2, 2);
        let m = assemble_mass(&space, 100.0);
        let c = space.interpolate(|_| [1.0, -2.0, 0.5]);
        let expected = 100.0 * (1.0 + 4.0 + 0.25);
        assert!((m.bilinear(&c, &c) - expected).abs() < 1e-10 * expected);
        let total: f64 = m.values().iter().sum();
        assert!((total - 300.0).abs() < 1e-10);
    }

    #[test]
    fn mass_matches_high_order_quadrature() {
        let space = cube_space(2, 2);
        let m = assemble_mass(&space, 3.0);
        let w = random_field(&space, 5);
        let rule = quadrature(8).unwrap();
        let tab = space.tabulate(&rule);
        let mut oracle = 0.0;
        for t in 0..space.mesh().tets().len() {
            let geo = space.geometry(t);
            for (q, b) in tab.iter().enumerate() {
                let (v, _) = space.eval_at(t, &geo, b, &w);
                oracle += 3.0 * rule.weights[q] * geo.det.abs() * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            }
        }
        assert!((m.bilinear(&w, &w) - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn elastic_null_space_and_dilation() {
        let (mu, lambda) = (1.7, 0.9);
        for p in 1..=2 {
            let space = cube_space(2, p);
            let k = assemble_elastic(&space, mu, lambda);
            assert!(k.max_asymmetry() < 1e-12 * k.max_abs());
            let c = space.interpolate(|_| [0.3, 1.0, -2.0]);
            assert!(crate::linalg::max_abs(&k.mul_vec(&c)) < 1e-12 * k.max_abs());
            let omega = [0.2, -0.7, 1.1];
            let rot = space.interpolate(|x| crate::geom::cross(&omega, &x));
            assert!(k.bilinear(&rot, &rot).abs() < 1e-12 * k.max_abs());
            let dil = space.interpolate(|x| x);
            let e = k.bilinear(&dil, &dil);
            assert!((e - (6.0 * mu + 9.0 * lambda)).abs() < 1e-11, "p={p} e={e}");
        }
    }

    #[test]
    fn deviatoric_examples() {
        let kappa = 2.5;
        let space = cube_space(2, 2);
        let k = assemble_deviatoric(&space, kappa);
        let dil = space.interpolate(|x| x);
        assert!(crate::linalg::max_abs(&k.mul_vec(&dil)) < 1e-12 * k.max_abs());
        let shear = space.interpolate(|x| [x[1], 0.0, 0.0]);
        assert!((k.bilinear(&shear, &shear) - 0.5 * kappa).abs() < 1e-12);
    }

    #[test]
    fn deviatoric_identity_from_separate_pieces() {
        let space = cube_space(2, 2);
        let kappa = 4.0;
        let kve = assemble_deviatoric(&space, kappa);
        let eps = assemble_strain_form(&space, 1.0, 0.0);
        let div = assemble_strain_form(&space, 0.0, 1.0);
        let w = random_field(&space, 9);
        let lhs = kve.bilinear(&w, &w);
        let rhs = kappa * (eps.bilinear(&w, &w) - div.bilinear(&w, &w) / 3.0);
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs());
    }

    #[test]
    fn deviatoric_bounded_by_elastic_without_lambda() {
        let space = cube_space(2, 1);
        let (mu, kappa) = (1.3, 2.0);
        let ke = assemble_elastic(&space, mu, 0.0);
        let kve = assemble_deviatoric(&space, kappa);
        for seed in 0..5 {
            let w = random_field(&space, seed);
            let a = kve.bilinear(&w, &w);
            assert!(a >= 0.0);
            assert!(a <= kappa / (2.0 * mu) * ke.bilinear(&w, &w) * (1.0 + 1e-12));
        }
    }

    struct Constant {
        f: Vec3,
        p: f64,
    }

    impl LoadSpec for Constant {
        fn body_force(&self, _: Vec3, _: f64) -> Vec3 {
            self.f
        }
        fn traction(&self, label: &str, _: Vec3, n: Vec3, _: f64) -> Vec3 {
            if label == "loaded" {
                crate::geom::scale(&n, self.p)
            } else {
                [0.0; 3]
            }
        }
    }

    #[test]
    fn load_examples() {
        let mesh = build_box_mesh(2, [1.0; 3], |face, _| match face {
            BoxFace::XMax => BoundaryTag::neumann("loaded"),
            _ => BoundaryTag::neumann("free"),
        })
        .unwrap();
        let space = FeSpace::new(Arc::new(mesh), 2).unwrap();
        let d = [0.4, -1.0, 2.0];
        let test = space.interpolate(|_| d);
        let body = assemble_body_load(&space, &Constant { f: [1.0, 2.0, 3.0], p: 0.0 }, 0.0, 4);
        let dot: f64 = body.iter().zip(&test).map(|(a, b)| a * b).sum();
        assert!((dot - (0.4 - 2.0 + 6.0)).abs() < 1e-12);
        let trac = assemble_traction_load(&space, &Constant { f: [0.0; 3], p: 7.0 }, 0.0, 4);
        let dot: f64 = trac.iter().zip(&test).map(|(a, b)| a * b).sum();
        assert!((dot - 7.0 * 0.4).abs() < 1e-12);
        let none = assemble_load(&space, &NoLoads, 0.0, 4);
        assert!(none.iter().all(|&v| v == 0.0));
    }
}
