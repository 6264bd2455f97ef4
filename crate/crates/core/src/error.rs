use thiserror::Error;

/// Errors raised by the numerical core and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid resolution {0}: grid size must be even and at least 4")]
    InvalidResolution(usize),

    #[error("invalid resolution pair: coarse n={coarse} must be smaller than fine n={fine}")]
    InvalidResolutionPair { coarse: usize, fine: usize },

    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("field contains non-finite entries")]
    NonFinite,

    #[error("spectrum is not Hermitian: anti-Hermitian residue {residue:e} exceeds {limit:e}")]
    NonHermitianInput { residue: f64, limit: f64 },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("reference field has zero norm; relative metrics are undefined")]
    DegenerateReference,

    #[error("no wavenumber satisfies the forcing cutoff lambda <= {lambda_cut}")]
    EmptyBand { lambda_cut: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cache does not match the model: {0}")]
    CacheMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training diverged at step {step}: loss is not finite")]
    DivergenceDetected {
        step: usize,
        /// Evaluation records collected before the divergence.
        history: Box<crate::train::MetricHistory>,
    },

    #[error("bound violation in {lemma} on sample {sample}: lhs {lhs:e} > rhs {rhs:e}")]
    BoundViolation {
        lemma: String,
        sample: usize,
        lhs: f64,
        rhs: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
