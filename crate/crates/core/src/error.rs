use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate lattice: det = {det:e}")]
    DegenerateLattice { det: f64 },

    #[error("modulus outside its domain: {0}")]
    InvalidModulus(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("normalized eigenvalue {value} exceeds the {topology} ceiling {ceiling}")]
    CeilingViolation {
        value: f64,
        ceiling: f64,
        topology: &'static str,
    },

    #[error("mass matrix is not positive semidefinite (min eigenvalue {min_eig:e}); raise quadrature resolution")]
    IndefiniteMass { min_eig: f64 },

    #[error("measure has an atom carrying {fraction:.3} of the mass; centering does not exist")]
    SingleAtom { fraction: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("search over integer re-markings unstable up to radius {radius}")]
    SearchUnstable { radius: i64 },

    #[error("eigenvalue is not simple (cluster of {multiplicity}); use the cluster envelope")]
    MultipleEigenvalue { multiplicity: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
