use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("component {index} = {value:e} is outside the open positive orthant")]
    Domain { index: usize, value: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("basis vectors are linearly dependent (condition number {condition:e})")]
    Basis { condition: f64 },

    #[error("matrix is singular: {context}")]
    Singular { context: String },

    #[error("matrix is not symmetric positive definite: {context} (eigenvalue {eigenvalue:e})")]
    NotSpd { context: String, eigenvalue: f64 },

    #[error("invalid model parameter: {0}")]
    Parameter(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("block solver failed: singular pivot block at row {row}")]
    SingularPivot { row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("time step needs {needed} CFL sub-steps, more than the cap of {cap}")]
    StepSize { needed: usize, cap: usize },

    #[error("density fell to {value:e} in cell {cell} at t = {time} (floor {floor:e})")]
    PositivityLoss {
        time: f64,
        cell: usize,
        value: f64,
        floor: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
