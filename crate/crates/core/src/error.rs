//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid chain size: need at least {min} sites, got {got}")]
    InvalidSize { min: usize, got: usize },

    #[error("site index {site} out of range 1..={max}")]
    SiteOutOfRange { site: usize, max: usize },

    #[error("operator dimensions differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },

    #[error("dimension {dim} exceeds capacity {cap} for {what}")]
    Capacity {
        dim: usize,
        cap: usize,
        what: &'static str,
    },

    #[error("matrix is not Hermitian: max |M - M^dag| entry {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("product is not Hermitian: largest imaginary coefficient {max_imag:.3e}")]
    NonHermitianProduct { max_imag: f64 },

    #[error("eigensolver did not converge within {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("all {computed} computed levels are degenerate with the ground state; raise k")]
    GapInconclusive { computed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary under-sampled: angle_min {angle_min:.3e} needs sample spacing <= {required:.3e}, got {spacing:.3e}")]
    BoundaryResolution {
        angle_min: f64,
        required: f64,
        spacing: f64,
    },

    #[error("state is not a simultaneous eigenvector: residuals ({res_a:.3e}, {res_b:.3e}) exceed {tolerance:.3e}")]
    NotACommonEigenvector {
        res_a: f64,
        res_b: f64,
        tolerance: f64,
    },

    #[error("term not mappable to a quadratic fermion operator: {0}")]
    UnmappableTerm(String),

    #[error("particle-hole symmetry violated: pairing mismatch {deviation:.3e}")]
    ParticleHoleViolation { deviation: f64 },

    #[error("linear algebra backend failure: {0}")]
    Backend(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
