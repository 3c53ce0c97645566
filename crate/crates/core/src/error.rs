use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadratic form is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("generator {index} is not in sp(V, omega): asymmetry of J*xi is {asymmetry:.3e}")]
    NonSymplecticGenerator { index: usize, asymmetry: f64 },

    #[error("{context}: no clear singular-value gap (ratio {gap_ratio:.3e}, singular values {singular_values:?})")]
    IllConditioned {
        context: String,
        gap_ratio: f64,
        singular_values: Vec<f64>,
    },

    #[error("{0}")]
    NotConverged(String),

    #[error("point is not a relative equilibrium: residual {residual:.3e} exceeds {threshold:.3e}")]
    NotRelEq { residual: f64, threshold: f64 },

    #[error("zero level set of the moment map is {{0}}: {certificate}")]
    EmptyLevelSet { certificate: String },

    #[error("projected Newton stalled after {iterations} iterations (|Phi| = {residual:.3e})")]
    NewtonStall { iterations: usize, residual: f64 },

    #[error("unsupported group kind: {0}")]
    UnsupportedGroupKind(String),

    #[error("implicit midpoint solve diverged at step {step} (residual {residual:.3e})")]
    InnerNewtonDiverged { step: usize, residual: f64 },

    #[error("shooting Newton diverged after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("shooting converged to a relative equilibrium (relative speed {speed:.3e})")]
    ConvergedToEquilibrium { speed: f64 },

    #[error("{context}: rank decision ambiguous (gap ratio {gap_ratio:.3e})")]
    RankAmbiguous { context: String, gap_ratio: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
