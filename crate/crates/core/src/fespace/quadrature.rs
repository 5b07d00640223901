//! Collapsed-coordinate (conical product) Gauss rules on the reference
//! tetrahedron and triangle. All weights are positive.

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 8;

/// Quadrature on the reference tet; weights sum to its volume 1/6.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(1 − Σξ, ξ₁, ξ₂, ξ₃)`.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature on the reference triangle; weights sum to its area 1/2.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Rule integrating every polynomial of total degree `degree` exactly.
pub fn quadrature(degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    if degree <= 1 {
        return Ok(QuadratureRule {
            points: vec![[0.25; 4]],
            weights: vec![1.0 / 6.0],
            degree,
        });
    }
    // ξ₁ = u, ξ₂ = v(1 − u), ξ₃ = w(1 − u)(1 − v), Jacobian (1 − u)²(1 − v)
    let (xu, wu) = gauss_legendre((degree + 3).div_ceil(2));
    let (xv, wv) = gauss_legendre((degree + 2).div_ceil(2));
    let (xw, ww) = gauss_legendre((degree + 1).div_ceil(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (u, au) in xu.iter().zip(&wu) {
        for (v, av) in xv.iter().zip(&wv) {
            for (w, aw) in xw.iter().zip(&ww) {
                let x1 = u;
                let x2 = v * (1.0 - u);
                let x3 = w * (1.0 - u) * (1.0 - v);
                points.push([1.0 - x1 - x2 - x3, *x1, x2, x3]);
                weights.push(au * av * aw * (1.0 - u).powi(2) * (1.0 - v));
            }
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

pub fn triangle_quadrature(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE + 2 {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    if degree <= 1 {
        return Ok(TriangleRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![0.5],
            degree,
        });
    }
    let (xu, wu) = gauss_legendre((degree + 2).div_ceil(2));
    let (xv, wv) = gauss_legendre((degree + 1).div_ceil(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (u, au) in xu.iter().zip(&wu) {
        for (v, av) in xv.iter().zip(&wv) {
            let x1 = *u;
            let x2 = v * (1.0 - u);
            points.push([1.0 - x1 - x2, x1, x2]);
            weights.push(au * av * (1.0 - u));
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}
