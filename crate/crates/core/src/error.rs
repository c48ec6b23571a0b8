use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ions {0} and {1} coincide (Coulomb singularity)")]
    CoincidentIons(usize, usize),

    #[error("equilibrium solver did not converge after {iterations} iterations (gradient max-norm {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("positions are not an equilibrium (gradient max-norm {residual:.3e})")]
    NotEquilibrium { residual: f64 },

    #[error("soft mode {mode}: Hessian eigenvalue {eigenvalue:.6e} (units of m·ω_z²) is not positive")]
    SoftMode { mode: usize, eigenvalue: f64 },

    #[error("Hessian condition number {condition:.3e} exceeds limit {limit:.1e} (soft mode {mode}, eigenvalue {eigenvalue:.3e})")]
    IllConditioned {
        condition: f64,
        limit: f64,
        mode: usize,
        eigenvalue: f64,
    },

    #[error("evaluation point lies on filament {0}")]
    OnFilament(usize),

    #[error("gradient of magnitude undefined at field null (|B| = {0:.3e} T)")]
    FieldNull(f64),

    #[error("matrix is not diagonal; diagonalize the curvature matrices first (largest off-diagonal {0:.3e})")]
    NotDiagonal(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{count} spins exceed the exhaustive-search bound of {max}; truncate to a smaller block")]
    TooManySpins { count: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
