use thiserror::Error;

/// Errors surfaced by measure construction, simulation and bound evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("density is not normalizable here: {0}")]
    UnnormalizedDensity(String),

    #[error("sampler diagnostic failure: {0}")]
    SamplerDiagnosticFailure(String),

    #[error("no Poincaré bound route applies: {0}")]
    PoincareUnavailable(String),

    #[error("covariance is numerically singular: smallest eigenvalue {0:.3e}")]
    SingularCovariance(f64),

    #[error("quadrature did not converge: {0}")]
    QuadratureNoConvergence(String),

    #[error("time {0} outside [0, 1)")]
    TimeOutOfRange(f64),

    #[error("drift blow-up at t = {t}: |v| = {norm:.3e}")]
    DriftBlowup { t: f64, norm: f64 },

    #[error("ensembles live on different grids: {0}")]
    GridMismatch(String),

    #[error("hypothesis of `{bound}` violated: {reason}")]
    HypothesisViolated { bound: String, reason: String },

    #[error("matrix is not positive definite: smallest eigenvalue {0:.3e}")]
    NotPositiveDefinite(f64),

    #[error("convolution density unavailable: {0}")]
    ConvolutionUnavailable(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
