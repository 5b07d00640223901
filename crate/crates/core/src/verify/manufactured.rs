//! Closed-form manufactured solution on the unit cube.
//!
//! The velocity is `a(t) V(x)` with `a(t) = e^{1−t}(a₁t + a₂t²)`; displacement
//! and internal variables share the spatial shape `V` with their own scalar
//! time factors, so stresses and loads separate into time scalars times
//! fixed spatial fields.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::assembly::{assemble_body_load, assemble_traction_load, LoadSpec};
use crate::fespace::FeSpace;
use crate::material::{MaterialModel, MaxwellArm};
use crate::mesh::{build_box_mesh, BoundaryTag, BoxFace, Mesh};
use crate::{Mat3, Result, Vec3};

/// `sin(a s + b)`
#[derive(Clone, Copy, Debug)]
struct Factor {
    a: f64,
    b: f64,
}

impl Factor {
    /// `n`-th derivative at `s`.
    fn derivative(&self, n: usize, s: f64) -> f64 {
        self.a.powi(n as i32) * (self.a * s + self.b + n as f64 * FRAC_PI_2).sin()
    }
}

/// The spatial shape `V(x)`: each component a constant times a product of
/// one-dimensional sine factors.
#[derive(Clone, Debug)]
pub struct Shape {
    coeff: [f64; 3],
    factors: [[Factor; 3]; 3],
}

impl Default for Shape {
    fn default() -> Self {
        let cos_pi = Factor { a: PI, b: FRAC_PI_2 };
        let quarter = Factor { a: FRAC_PI_2, b: FRAC_PI_4 };
        let sin_pi = Factor { a: PI, b: 0.0 };
        let half = Factor { a: FRAC_PI_2, b: 0.0 };
        Self {
            coeff: [0.75, 0.75, 1.0],
            factors: [
                [cos_pi, quarter, sin_pi],
                [quarter, cos_pi, sin_pi],
                [quarter, quarter, half],
            ],
        }
    }
}

impl Shape {
    /// `∂^α V_i(x)`.
    pub fn derivative(&self, i: usize, alpha: [usize; 3], x: Vec3) -> f64 {
        let f = &self.factors[i];
        self.coeff[i] * f[0].derivative(alpha[0], x[0]) * f[1].derivative(alpha[1], x[1]) * f[2].derivative(alpha[2], x[2])
    }

    pub fn value(&self, x: Vec3) -> Vec3 {
        [0, 1, 2].map(|i| self.derivative(i, [0; 3], x))
    }

    /// `grad[i][j] = ∂V_i/∂x_j`
    pub fn gradient(&self, x: Vec3) -> Mat3 {
        let mut g = [[0.0; 3]; 3];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut alpha = [0; 3];
                alpha[j] = 1;
                *v = self.derivative(i, alpha, x);
            }
        }
        g
    }

    fn second(&self, i: usize, j: usize, l: usize, x: Vec3) -> f64 {
        let mut alpha = [0; 3];
        alpha[j] += 1;
        alpha[l] += 1;
        self.derivative(i, alpha, x)
    }

    /// `½(ΔV + ∇(∇·V))`, the divergence of `ε(V)`.
    pub fn strain_divergence(&self, x: Vec3) -> Vec3 {
        let grad_div = self.grad_div(x);
        [0, 1, 2].map(|i| {
            let lap: f64 = (0..3).map(|j| self.second(i, j, j, x)).sum();
            0.5 * (lap + grad_div[i])
        })
    }

    /// `∇(∇·V)`
    pub fn grad_div(&self, x: Vec3) -> Vec3 {
        [0, 1, 2].map(|i| (0..3).map(|j| self.second(j, j, i, x)).sum())
    }
}

/// `φ_k(x) = (eˣ − Σ_{j<k} xʲ/j!) / xᵏ`, evaluated stably near zero.
fn phi(k: i32, x: f64) -> f64 {
    if x.abs() < 0.5 {
        // Σ_j xʲ/(j+k)!
        let mut term = 1.0;
        for j in 1..=k {
            term /= j as f64;
        }
        let mut sum = term;
        for j in 1..40 {
            term *= x / (j + k) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let mut partial = 0.0;
        let mut term = 1.0;
        for j in 0..k {
            partial += term;
            term *= x / (j + 1) as f64;
        }
        (x.exp() - partial) / x.powi(k)
    }
}

/// Which field [`ManufacturedSolution::eval`] returns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Displacement,
    Velocity,
    /// Internal variable of arm `m`.
    Internal(usize),
    BodyForce,
    /// Traction for the given outward normal.
    Traction(Vec3),
    /// Stress, row-major.
    Stress,
}

#[derive(Clone, Debug)]
pub struct ManufacturedSolution {
    pub material: MaterialModel,
    pub a1: f64,
    pub a2: f64,
    pub shape: Shape,
}

impl ManufacturedSolution {
    pub fn new(material: MaterialModel) -> Self {
        Self {
            material,
            a1: 0.2,
            a2: 0.2,
            shape: Shape::default(),
        }
    }

    /// ρ = 100, E = κ = 1e5, ν = 0.3, one arm with τ = 1e3/κ.
    pub fn standard_material() -> MaterialModel {
        let kappa = 1e5;
        MaterialModel::from_engineering(100.0, 1e5, 0.3, vec![MaxwellArm { kappa, tau: 1e3 / kappa }])
            .expect("valid constants")
    }

    /// Velocity time factor `a(t)`.
    pub fn a(&self, t: f64) -> f64 {
        (1.0 - t).exp() * (self.a1 * t + self.a2 * t * t)
    }

    pub fn a_dot(&self, t: f64) -> f64 {
        (1.0 - t).exp() * (self.a1 + 2.0 * self.a2 * t) - self.a(t)
    }

    /// `∫₀ᵗ e^{−(t−s)/τ} a(s) ds`; `inv_tau = 0` gives the plain antiderivative.
    fn relaxed(&self, inv_tau: f64, t: f64) -> f64 {
        let x = (1.0 - inv_tau) * t;
        std::f64::consts::E
            * (-t).exp()
            * (self.a1 * t * t * phi(2, x) + 2.0 * self.a2 * t.powi(3) * phi(3, x))
    }

    /// Displacement time factor `A(t)`, `A' = a`, `A(0) = 0`.
    pub fn big_a(&self, t: f64) -> f64 {
        self.relaxed(0.0, t)
    }

    /// Internal-variable time factor of arm `m`.
    pub fn g(&self, m: usize, t: f64) -> f64 {
        self.relaxed(1.0 / self.material.arms[m].tau, t)
    }

    pub fn g_dot(&self, m: usize, t: f64) -> f64 {
        self.a(t) - self.g(m, t) / self.material.arms[m].tau
    }

    /// Coefficients `(c_eps, c_div)` with `σ = c_eps ε(V) + c_div (∇·V) I`.
    pub fn stress_coefficients(&self, t: f64) -> (f64, f64) {
        let big_a = self.big_a(t);
        let mat = &self.material;
        let visco: f64 = mat
            .arms
            .iter()
            .enumerate()
            .map(|(m, arm)| arm.kappa * self.g(m, t))
            .sum();
        (2.0 * mat.mu * big_a + visco, mat.lambda * big_a - visco / 3.0)
    }

    pub fn velocity(&self, t: f64, x: Vec3) -> Vec3 {
        scale3(self.a(t), self.shape.value(x))
    }

    pub fn displacement(&self, t: f64, x: Vec3) -> Vec3 {
        scale3(self.big_a(t), self.shape.value(x))
    }

    pub fn internal(&self, m: usize, t: f64, x: Vec3) -> Vec3 {
        scale3(self.g(m, t), self.shape.value(x))
    }

    pub fn stress(&self, t: f64, x: Vec3) -> Mat3 {
        let (ce, cd) = self.stress_coefficients(t);
        let g = self.shape.gradient(x);
        let div = g[0][0] + g[1][1] + g[2][2];
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = 0.5 * ce * (g[i][j] + g[j][i]);
            }
            s[i][i] += cd * div;
        }
        s
    }

    /// `f = ρ ü₀ − ∇·σ`
    pub fn body_force(&self, t: f64, x: Vec3) -> Vec3 {
        let (ce, cd) = self.stress_coefficients(t);
        let rho_adot = self.material.density * self.a_dot(t);
        let v = self.shape.value(x);
        let we = self.shape.strain_divergence(x);
        let wd = self.shape.grad_div(x);
        [0, 1, 2].map(|i| rho_adot * v[i] - ce * we[i] - cd * wd[i])
    }

    /// `g = σ n`
    pub fn traction(&self, t: f64, x: Vec3, n: Vec3) -> Vec3 {
        let s = self.stress(t, x);
        [0, 1, 2].map(|i| s[i][0] * n[0] + s[i][1] * n[1] + s[i][2] * n[2])
    }

    pub fn eval(&self, q: Quantity, t: f64, x: Vec3) -> Vec<f64> {
        match q {
            Quantity::Displacement => self.displacement(t, x).to_vec(),
            Quantity::Velocity => self.velocity(t, x).to_vec(),
            Quantity::Internal(m) => self.internal(m, t, x).to_vec(),
            Quantity::BodyForce => self.body_force(t, x).to_vec(),
            Quantity::Traction(n) => self.traction(t, x, n).to_vec(),
            Quantity::Stress => self.stress(t, x).iter().flatten().copied().collect(),
        }
    }
}

fn scale3(s: f64, v: Vec3) -> Vec3 {
    [s * v[0], s * v[1], s * v[2]]
}

pub const CLAMPED: &str = "bottom";
pub const LOADED: &str = "traction";

/// Unit cube with `n` cells per axis, clamped at `z = 0`, traction elsewhere.
pub fn manufactured_mesh(n: usize) -> Result<Mesh> {
    build_box_mesh(n, [1.0; 3], |face, _| match face {
        BoxFace::ZMin => BoundaryTag::dirichlet(CLAMPED),
        _ => BoundaryTag::neumann(LOADED),
    })
}

impl LoadSpec for ManufacturedSolution {
    fn body_force(&self, x: Vec3, t: f64) -> Vec3 {
        ManufacturedSolution::body_force(self, t, x)
    }

    fn traction(&self, _label: &str, x: Vec3, n: Vec3, t: f64) -> Vec3 {
        ManufacturedSolution::traction(self, t, x, n)
    }
}

struct SpatialPart<'a> {
    shape: &'a Shape,
    part: usize,
}

impl LoadSpec for SpatialPart<'_> {
    fn body_force(&self, x: Vec3, _t: f64) -> Vec3 {
        match self.part {
            0 => self.shape.value(x),
            1 => self.shape.strain_divergence(x),
            _ => self.shape.grad_div(x),
        }
    }

    fn traction(&self, _label: &str, x: Vec3, n: Vec3, _t: f64) -> Vec3 {
        let g = self.shape.gradient(x);
        match self.part {
            1 => [0, 1, 2].map(|i| (0..3).map(|j| 0.5 * (g[i][j] + g[j][i]) * n[j]).sum()),
            2 => scale3(g[0][0] + g[1][1] + g[2][2], n),
            _ => [0.0; 3],
        }
    }
}

/// Manufactured loads bound to one space, using the separation into time
/// scalars and precomputed spatial load vectors.
pub struct ManufacturedLoads {
    pub solution: ManufacturedSolution,
    body: [Vec<f64>; 3],
    traction: [Vec<f64>; 2],
}

impl ManufacturedLoads {
    pub fn new(solution: ManufacturedSolution, space: &FeSpace, degree: usize) -> Self {
        let part = |p| SpatialPart {
            shape: &solution.shape,
            part: p,
        };
        let body = [0, 1, 2].map(|p| assemble_body_load(space, &part(p), 0.0, degree));
        let traction = [1, 2].map(|p| assemble_traction_load(space, &part(p), 0.0, degree));
        Self {
            solution,
            body,
            traction,
        }
    }

    fn add_body(&self, t: f64, w: f64, out: &mut [f64]) {
        let (ce, cd) = self.solution.stress_coefficients(t);
        let ra = self.solution.material.density * self.solution.a_dot(t);
        for (i, o) in out.iter_mut().enumerate() {
            *o += w * (ra * self.body[0][i] - ce * self.body[1][i] - cd * self.body[2][i]);
        }
    }

    fn add_traction(&self, t: f64, w: f64, out: &mut [f64]) {
        let (ce, cd) = self.solution.stress_coefficients(t);
        for (i, o) in out.iter_mut().enumerate() {
            *o += w * (ce * self.traction[0][i] + cd * self.traction[1][i]);
        }
    }

    /// `F(t)` at a single instant.
    pub fn load_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.body[0].len()];
        self.add_body(t, 1.0, &mut out);
        self.add_traction(t, 1.0, &mut out);
        out
    }
}

impl LoadSpec for ManufacturedLoads {
    fn body_force(&self, x: Vec3, t: f64) -> Vec3 {
        self.solution.body_force(t, x)
    }

    fn traction(&self, _label: &str, x: Vec3, n: Vec3, t: f64) -> Vec3 {
        self.solution.traction(t, x, n)
    }

    fn time_integral(&self, t_prev: f64, t_next: f64) -> Option<Vec<f64>> {
        let half = 0.5 * (t_next - t_prev);
        let mid = 0.5 * (t_next + t_prev);
        let offset = half / 3f64.sqrt();
        let mut out = vec![0.0; self.body[0].len()];
        self.add_body(mid - offset, half, &mut out);
        self.add_body(mid + offset, half, &mut out);
        self.add_traction(t_prev, half, &mut out);
        self.add_traction(t_next, half, &mut out);
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::maxwell_convolution;

    #[test]
    fn velocity_example() {
        let s = ManufacturedSolution::new(ManufacturedSolution::standard_material());
        let v = s.velocity(1.0, [0.5; 3]);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        assert!((v[2] - 2f64.sqrt() / 5.0).abs() < 1e-15);
        for x in [[0.1, 0.7, 0.3], [0.9, 0.2, 0.5]] {
            assert_eq!(s.velocity(0.0, x), [0.0; 3]);
            assert_eq!(s.displacement(0.0, x), [0.0; 3]);
        }
    }

    #[test]
    fn phi_series_and_direct_agree() {
        for k in 1..=3 {
            for x in [0.49f64, -0.49] {
                let direct = {
                    let mut partial = 0.0;
                    let mut term = 1.0;
                    for j in 0..k {
                        partial += term;
                        term *= x / (j + 1) as f64;
                    }
                    (x.exp() - partial) / x.powi(k)
                };
                assert!((phi(k, x) - direct).abs() < 1e-12 * direct.abs());
            }
        }
    }

    #[test]
    fn time_factors_match_quadrature() {
        let s = ManufacturedSolution::new(ManufacturedSolution::standard_material());
        for t in [0.05, 0.3, 1.0] {
            let arm = s.material.arms[0];
            let unit = MaxwellArm { kappa: 1.0, ..arm };
            let oracle = maxwell_convolution(unit, |u| s.a(u), t);
            assert!((s.g(0, t) - oracle).abs() < 1e-10 * oracle.abs(), "t={t}");
            let slow = MaxwellArm { kappa: 1.0, tau: 1e300 };
            let oracle = maxwell_convolution(slow, |u| s.a(u), t);
            assert!((s.big_a(t) - oracle).abs() < 1e-10 * oracle.abs());
        }
    }

    #[test]
    fn spatial_derivatives_match_finite_differences() {
        let shape = Shape::default();
        let h = 1e-5;
        for x in [[0.2, 0.4, 0.6], [0.9, 0.1, 0.35]] {
            let g = shape.gradient(x);
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let (vp, vm) = (shape.value(xp), shape.value(xm));
                for i in 0..3 {
                    assert!((g[i][j] - (vp[i] - vm[i]) / (2.0 * h)).abs() < 1e-6);
                }
                // ∂_j of ∇·V
                let div = |y: Vec3| {
                    let g = shape.gradient(y);
                    g[0][0] + g[1][1] + g[2][2]
                };
                let fd = (div(xp) - div(xm)) / (2.0 * h);
                assert!((shape.grad_div(x)[j] - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn loads_satisfy_the_strong_equations() {
        // ρ ∂ₜu₁ − ∇·σ − f, with ∂ₜ and ∇· by central differences of the
        // closed-form velocity and stress
        let s = ManufacturedSolution::new(ManufacturedSolution::standard_material());
        let mut rng = 0.123_f64;
        let mut next = || {
            rng = (rng * 9301.0 + 0.49297).fract();
            rng
        };
        // fourth-order central differences
        let h = 1e-3;
        let d = |f: &dyn Fn(f64) -> f64| (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
        for _ in 0..100 {
            let x = [next(), next(), next()];
            let t = 0.05 + 0.9 * next();
            let f = s.body_force(t, x);
            let mut div = [0.0; 3];
            for j in 0..3 {
                for (i, v) in div.iter_mut().enumerate() {
                    *v += d(&|e| {
                        let mut y = x;
                        y[j] += e;
                        s.stress(t, y)[i][j]
                    });
                }
            }
            let scale = f.iter().chain(&div).fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..3 {
                let rate = d(&|e| s.velocity(t + e, x)[i]);
                let r = s.material.density * rate - div[i] - f[i];
                assert!(r.abs() < 1e-8 * scale, "residual {r} scale {scale}");
            }
            // internal variable ODE
            let g = s.g_dot(0, t);
            let fd = d(&|e| s.g(0, t + e));
            assert!((g - fd).abs() < 1e-6 * g.abs().max(1.0));
        }
    }
}
