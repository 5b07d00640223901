//! Sparse matrices and the linear solvers used by the time integrators.

mod cg;
mod envelope;
mod sparse;

pub use cg::{conjugate_gradient, CgOutcome};
pub use envelope::{reverse_cuthill_mckee, EnvelopeCholesky, EnvelopeLu};
pub use sparse::CsrMatrix;

use crate::Result;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    /// Direct factorization below `direct_threshold` unknowns, CG above.
    Auto,
    Cg,
    Direct,
}

#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub method: SolverMethod,
    /// Relative residual target for CG.
    pub tolerance: f64,
    /// CG iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
    pub direct_threshold: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tolerance: 1e-12,
            max_iter_factor: 10,
            direct_threshold: 20_000,
        }
    }
}

/// A prepared solver for one symmetric positive definite matrix.
#[derive(Debug)]
pub enum SpdSolver {
    Cg {
        matrix: CsrMatrix,
        tolerance: f64,
        max_iter: usize,
    },
    Direct(EnvelopeCholesky),
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix, settings: &SolverSettings) -> Result<Self> {
        let n = matrix.nrows();
        let direct = match settings.method {
            SolverMethod::Direct => true,
            SolverMethod::Cg => false,
            SolverMethod::Auto => n <= settings.direct_threshold,
        };
        if direct {
            Ok(SpdSolver::Direct(EnvelopeCholesky::factor(&matrix)?))
        } else {
            Ok(SpdSolver::Cg {
                matrix,
                tolerance: settings.tolerance,
                max_iter: settings.max_iter_factor.saturating_mul(n.max(1)),
            })
        }
    }

    /// Solves with `x` as the initial guess for iterative methods.
    pub fn solve_into(&self, rhs: &[f64], x: &mut [f64]) -> Result<()> {
        match self {
            SpdSolver::Cg {
                matrix,
                tolerance,
                max_iter,
            } => {
                conjugate_gradient(matrix, rhs, x, *tolerance, *max_iter)?;
                Ok(())
            }
            SpdSolver::Direct(chol) => {
                x.copy_from_slice(&chol.solve(rhs));
                Ok(())
            }
        }
    }
}
