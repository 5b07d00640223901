//! Stress recovery from element gradients.

use crate::dynamics::{Operators, State};
use crate::fespace::{reference_basis, CellGeometry};
use crate::material::MaterialModel;
use crate::{Mat3, Vec3};

fn sym(g: &Mat3) -> Mat3 {
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = 0.5 * (g[i][j] + g[j][i]);
        }
    }
    e
}

/// `σ = 2μ ε(u₀) + λ tr ε(u₀) I + Σ_m κ_m e(u_VE^m)` from displacement and
/// internal-variable gradients.
pub fn hooke_stress(material: &MaterialModel, grad_u0: &Mat3, grad_ve: &[Mat3]) -> Mat3 {
    let eps = sym(grad_u0);
    let tr = eps[0][0] + eps[1][1] + eps[2][2];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 2.0 * material.mu * eps[i][j];
        }
        s[i][i] += material.lambda * tr;
    }
    for (arm, g) in material.arms.iter().zip(grad_ve) {
        let e = sym(g);
        let tr = (e[0][0] + e[1][1] + e[2][2]) / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                let dev = if i == j { e[i][j] - tr } else { e[i][j] };
                s[i][j] += arm.kappa * dev;
            }
        }
    }
    s
}

/// `√(3/2 s:s)` with `s` the stress deviator.
pub fn von_mises(s: &Mat3) -> f64 {
    let p = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
    let mut sum = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = if i == j { s[i][j] - p } else { s[i][j] };
            sum += d * d;
        }
    }
    (1.5 * sum).sqrt()
}

/// `n · σ n`
pub fn normal_stress(s: &Mat3, n: &Vec3) -> f64 {
    let mut v = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            v += n[i] * s[i][j] * n[j];
        }
    }
    v
}

/// Stress in cell `cell` at barycentric point `bary`.
pub fn stress_at(ops: &Operators, state: &State, cell: usize, geo: &CellGeometry, bary: [f64; 4]) -> Mat3 {
    let space = &ops.space;
    let basis = reference_basis(space.degree(), bary).expect("degree validated");
    let (_, g0) = space.eval_at(cell, geo, &basis, &state.u0);
    let gve: Vec<Mat3> = state
        .ve
        .iter()
        .map(|v| space.eval_at(cell, geo, &basis, v).1)
        .collect();
    hooke_stress(&ops.material, &g0, &gve)
}

/// Von Mises stress per mesh vertex, averaged over the cells sharing it.
pub fn vertex_von_mises(ops: &Operators, state: &State) -> Vec<f64> {
    let mesh = ops.space.mesh();
    let mut sum = vec![0.0; mesh.vertices().len()];
    let mut count = vec![0usize; mesh.vertices().len()];
    for (cell, tet) in mesh.tets().iter().enumerate() {
        let geo = ops.space.geometry(cell);
        for (local, &v) in tet.iter().enumerate() {
            let mut bary = [0.0; 4];
            bary[local] = 1.0;
            sum[v] += von_mises(&stress_at(ops, state, cell, &geo, bary));
            count[v] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::MaxwellArm;

    #[test]
    fn uniaxial_von_mises() {
        let mut s = [[0.0; 3]; 3];
        s[2][2] = -7.5;
        assert!((von_mises(&s) - 7.5).abs() < 1e-14);
        let hydro = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        assert!(von_mises(&hydro).abs() < 1e-14);
    }

    #[test]
    fn hand_computed_stress() {
        let material = MaterialModel::new(1.0, 2.0, 3.0, vec![MaxwellArm { kappa: 6.0, tau: 1.0 }]).unwrap();
        // u0 = (0.1 x, 0, 0), u_ve = (0, 0.3 x, 0)
        let g0 = [[0.1, 0.0, 0.0], [0.0; 3], [0.0; 3]];
        let gve = [[0.0; 3], [0.3, 0.0, 0.0], [0.0; 3]];
        let s = hooke_stress(&material, &g0, &[gve]);
        // σ_xx = 2·2·0.1 + 3·0.1, σ_yy = σ_zz = 0.3, σ_xy = 6·0.15
        assert!((s[0][0] - 0.7).abs() < 1e-14);
        assert!((s[1][1] - 0.3).abs() < 1e-14);
        assert!((s[2][2] - 0.3).abs() < 1e-14);
        assert!((s[0][1] - 0.9).abs() < 1e-14);
        assert!((s[1][0] - 0.9).abs() < 1e-14);
        assert_eq!(s[0][2], 0.0);
    }
}
