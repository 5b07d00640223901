use super::manufactured::ManufacturedSolution;
use crate::dynamics::{Operators, State};
use crate::fespace::{quadrature, MAX_QUADRATURE_DEGREE};
use crate::Mat3;

/// End-time errors against the exact solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    /// `⫴u − U⫴_A`
    pub energy: f64,
    /// `‖u₀ − U₀‖_{L²}`
    pub l2: f64,
}

fn strain_terms(g: &Mat3) -> (f64, f64) {
    let mut eps_sq = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let e = 0.5 * (g[i][j] + g[j][i]);
            eps_sq += e * e;
        }
    }
    let div = g[0][0] + g[1][1] + g[2][2];
    (eps_sq, div * div)
}

fn diff(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = a[i][j] - b[i][j];
        }
    }
    d
}

/// Errors evaluated with a volume rule of degree `2p + 2` against the exact
/// fields at the quadrature points.
pub fn error_norms(state: &State, exact: &ManufacturedSolution, ops: &Operators) -> ErrorNorms {
    let space = &ops.space;
    let mat = &ops.material;
    let degree = (2 * space.degree() + 2).min(MAX_QUADRATURE_DEGREE);
    let rule = quadrature(degree).expect("degree within range");
    let tab = space.tabulate(&rule);
    let t = state.t;
    let (a, big_a) = (exact.a(t), exact.big_a(t));
    let g: Vec<f64> = (0..mat.arms.len()).map(|m| exact.g(m, t)).collect();
    let (mut kinetic, mut elastic, mut visco, mut l2) = (0.0, 0.0, 0.0, 0.0);
    for cell in 0..space.mesh().tets().len() {
        let geo = space.geometry(cell);
        for (q, basis) in tab.iter().enumerate() {
            let w = rule.weights[q] * geo.det.abs();
            let x = geo.map(&rule.points[q]);
            let v = exact.shape.value(x);
            let gv = exact.shape.gradient(x);
            let scaled = |s: f64| {
                let mut m = gv;
                m.iter_mut().flatten().for_each(|e| *e *= s);
                m
            };

            let (u1, _) = space.eval_at(cell, &geo, basis, &state.u1);
            let e1: f64 = (0..3).map(|i| (a * v[i] - u1[i]).powi(2)).sum();
            kinetic += w * mat.density * e1;

            let (u0, g0) = space.eval_at(cell, &geo, basis, &state.u0);
            let e0: f64 = (0..3).map(|i| (big_a * v[i] - u0[i]).powi(2)).sum();
            l2 += w * e0;
            let (eps, div) = strain_terms(&diff(&scaled(big_a), &g0));
            elastic += w * (2.0 * mat.mu * eps + mat.lambda * div);

            for (m, arm) in mat.arms.iter().enumerate() {
                let (_, gve) = space.eval_at(cell, &geo, basis, &state.ve[m]);
                let (eps, div) = strain_terms(&diff(&scaled(g[m]), &gve));
                visco += w * arm.kappa * (eps - div / 3.0);
            }
        }
    }
    ErrorNorms {
        energy: (kinetic + elastic + visco).max(0.0).sqrt(),
        l2: l2.sqrt(),
    }
}

/// Distance between two discrete states on the same space, measured with the
/// assembled energy forms and the mass matrix.
pub fn discrete_distance(a: &State, b: &State, ops: &Operators) -> ErrorNorms {
    let d = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p - q).collect() };
    let du1 = d(&a.u1, &b.u1);
    let du0 = d(&a.u0, &b.u0);
    let mut energy = ops.mass.bilinear(&du1, &du1) + ops.elastic.bilinear(&du0, &du0);
    for (m, k) in ops.deviatoric.iter().enumerate() {
        let dv = d(&a.ve[m], &b.ve[m]);
        energy += k.bilinear(&dv, &dv);
    }
    ErrorNorms {
        energy: energy.max(0.0).sqrt(),
        l2: (ops.mass.bilinear(&du0, &du0) / ops.material.density).max(0.0).sqrt(),
    }
}
