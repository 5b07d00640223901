use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported polynomial degree {0} (supported: 1, 2, 3)")]
    UnsupportedDegree(usize),

    #[error("no quadrature rule of exactness degree {0} (maximum 8)")]
    UnsupportedQuadrature(usize),

    #[error("facet {0:?} is not a boundary facet")]
    NotBoundaryFacet([usize; 3]),

    #[error("degenerate slip normal at node {0}")]
    DegenerateNormal(usize),

    #[error("linear solver stopped after {iterations} iterations with relative residual {residual:.3e}")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("factorization broke down at row {row} (pivot {pivot:.3e})")]
    Factorization { row: usize, pivot: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
}

impl Error {
    /// True for failures of the linear algebra layer (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::SolverFailure { .. } | Error::Factorization { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
