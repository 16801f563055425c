use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("potential is not admissible: smallest eigenvalue {margin:.6e} is not positive")]
    NotAdmissible { margin: f64 },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no convergence in {solver} after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
