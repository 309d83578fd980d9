//! Error type shared by all modules of the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An orthogonal pair of probe vectors, kept for diagnostics when a channel
/// fails the isometry test. Complex entries are stored as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePair {
    pub phi: Vec<[f64; 2]>,
    pub psi: Vec<[f64; 2]>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("eigensolver did not converge (off-diagonal norm {off_diag:.3e} after {sweeps} sweeps)")]
    NoConvergence { off_diag: f64, sweeps: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is not a projector (idempotency defect {defect:.3e})")]
    NotProjector { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix is not an isometry (v*v deviates from identity by {defect:.3e})")]
    NotIsometry { defect: f64 },

    #[error("component ranges are not mutually orthogonal (defect {defect:.3e})")]
    RangesNotOrthogonal { defect: f64 },

    #[error("weights do not sum to 1 (sum {sum:.17})")]
    WeightsNotNormalized { sum: f64 },

    #[error("gauge block is not homogeneous: {detail}")]
    BlockNotHomogeneous { detail: String },

    #[error("gauge matrix is not unitary (defect {defect:.3e})")]
    GammaNotUnitary { defect: f64 },

    #[error("spectral fingerprint mismatch across probes: {detail}")]
    FingerprintMismatch { detail: String },

    #[error("{stage}: subspace rank did not stabilize (rank {rank}, target {target}, {probes} probes)")]
    RankNotStabilized {
        stage: &'static str,
        rank: usize,
        target: usize,
        probes: usize,
    },

    #[error("mixing invariant violated (probe residual {residual:.3e})")]
    MixingInvariantViolated { residual: f64 },

    #[error("linear/antilinear split degenerate (eigenvalue distance from ±i is {distance:.3e})")]
    SpectralSplitDegenerate { distance: f64 },

    #[error("linear/antilinear split undefined for one-dimensional input space")]
    DimOne,

    #[error("component kind contradicts the spectral split: {detail}")]
    KindMismatch { detail: String },

    #[error("pure component extraction residual too large ({residual:.3e})")]
    ExtractionResidualTooLarge { residual: f64 },

    #[error("reconstructed channel deviates from the input by {residual:.3e}")]
    ReconstructionFailed { residual: f64 },

    #[error("channel is not stochastic (residual {residual:.3e})")]
    NotStochastic { residual: f64 },

    #[error("channel is not a trace-norm isometry (probe defect {defect:.3e})")]
    NotAnIsometry { defect: f64, pair: Box<ProbePair> },

    #[error("output dimension {got} is too small ({needed} needed for the requested components)")]
    DimensionInsufficient { needed: usize, got: usize },

    #[error("invalid state: {detail}")]
    InvalidState { detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the name of the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, unwrapping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
