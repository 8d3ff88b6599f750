use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed to converge after {subdivisions} subdivisions (achieved {achieved:.3e}, requested {requested:.3e})")]
    NonConvergence {
        subdivisions: usize,
        achieved: f64,
        requested: f64,
    },

    #[error("accuracy loss: {0}")]
    AccuracyLoss(String),

    #[error("moment matrix is singular")]
    SingularMomentMatrix,

    #[error("closed-form moment matrix entry ({j},{k}) disagrees with quadrature: {closed:.6e} vs {quadrature:.6e}")]
    MomentMatrixMismatch {
        j: usize,
        k: usize,
        closed: f64,
        quadrature: f64,
    },

    #[error("point {0} is outside the system support")]
    OutOfSupport(f64),

    #[error("correlation order r={r} out of range 1..={n}")]
    OrderOutOfRange { r: usize, n: usize },

    #[error("n + r = {0} exceeds the supported size limit of 24")]
    SizeLimit(usize),

    #[error("sigma eigenvalues are degenerate (minimum gap {gap:.3e} below threshold {threshold:.3e})")]
    DegenerateSigma { gap: f64, threshold: f64 },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("eigenvalue solver failed to converge")]
    EigenFailure,

    #[error("histogram bins are not covered by the curve grid")]
    CoverageMismatch,

    #[error("invalid ensemble specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
