use super::{axpy, dot, norm, CsrMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients. `x` holds the initial guess
/// and receives the solution.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    tolerance: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = b.to_vec();
    let ax = a.mul_vec(x);
    axpy(-1.0, &ax, &mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let mut residual = norm(&r) / b_norm;
    let mut best = residual;
    let mut since_best = 0;
    for it in 0..max_iter {
        if residual <= tolerance {
            return Ok(CgOutcome {
                iterations: it,
                relative_residual: residual,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverFailure {
                iterations: it,
                residual,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        residual = norm(&r) / b_norm;

        if residual < best * 0.999 {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            // stagnation: no progress over a long stretch
            if since_best > 200 + n / 10 {
                return Err(Error::SolverFailure {
                    iterations: it + 1,
                    residual,
                });
            }
        }

        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if residual <= tolerance {
        Ok(CgOutcome {
            iterations: max_iter,
            relative_residual: residual,
        })
    } else {
        Err(Error::SolverFailure {
            iterations: max_iter,
            residual,
        })
    }
}
