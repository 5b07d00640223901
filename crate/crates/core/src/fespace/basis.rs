use crate::{Error, Result};

/// Barycentric multi-indices `α` (|α| = p) of the degree-`p` Lagrange nodes:
/// vertices first (in local vertex order), then edge, face and interior nodes.
pub fn lattice(p: usize) -> Vec<[usize; 4]> {
    let mut pts = Vec::new();
    for a in 0..=p {
        for b in 0..=p - a {
            for c in 0..=p - a - b {
                pts.push([a, b, c, p - a - b - c]);
            }
        }
    }
    pts.sort_by_key(|alpha| {
        let support = alpha.iter().filter(|&&x| x > 0).count();
        // vertices sorted by which vertex they sit on
        let lead = alpha.iter().position(|&x| x == p).unwrap_or(0);
        (support, lead, std::cmp::Reverse(*alpha))
    });
    pts
}

/// Values and reference-coordinate gradients of all basis functions at one point.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

/// `ℓ_a(s) = Π_{j<a} (p s − j)/(j + 1)` and its derivative.
fn lattice_factor(p: usize, a: usize, s: f64) -> (f64, f64) {
    let pf = p as f64;
    let mut value = 1.0;
    let mut deriv = 0.0;
    for j in 0..a {
        let jf = j as f64;
        let f = (pf * s - jf) / (jf + 1.0);
        let df = pf / (jf + 1.0);
        deriv = deriv * f + value * df;
        value *= f;
    }
    (value, deriv)
}

/// Degree-`p` Lagrange basis on the reference tet `{ξ ≥ 0, Σξ ≤ 1}` at the
/// point with barycentric coordinates `bary = (1 − Σξ, ξ₁, ξ₂, ξ₃)`.
pub fn reference_basis(p: usize, bary: [f64; 4]) -> Result<ReferenceBasis> {
    if !(1..=3).contains(&p) {
        return Err(Error::UnsupportedDegree(p));
    }
    let pts = lattice(p);
    let mut values = Vec::with_capacity(pts.len());
    let mut gradients = Vec::with_capacity(pts.len());
    for alpha in &pts {
        let f: [(f64, f64); 4] = std::array::from_fn(|i| lattice_factor(p, alpha[i], bary[i]));
        let value: f64 = f.iter().map(|x| x.0).product();
        // derivative with respect to each barycentric coordinate
        let dl: [f64; 4] = std::array::from_fn(|i| {
            (0..4)
                .map(|l| if l == i { f[l].1 } else { f[l].0 })
                .product()
        });
        values.push(value);
        gradients.push([dl[1] - dl[0], dl[2] - dl[0], dl[3] - dl[0]]);
    }
    Ok(ReferenceBasis { values, gradients })
}
