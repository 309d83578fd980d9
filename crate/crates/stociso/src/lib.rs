//! Stochastic isometries on finite-dimensional state spaces.
//!
//! A stochastic map is a linear, trace-preserving, positive map between the
//! Hermitian operator spaces of two Hilbert spaces; a stochastic isometry is
//! one that preserves the trace norm. Every stochastic isometry is a convex
//! combination of pure isometries induced by unitary or antiunitary maps onto
//! mutually orthogonal subspaces of the target space, and this crate makes
//! that decomposition constructive:
//!
//! - [`linops`]: dense complex Hermitian kernel (Jacobi eigensolver, trace
//!   norm, positive/negative parts, support projections, subspace joins);
//! - [`channel`]: real superoperator representation over Hermitian bases,
//!   mixed isometry forms, Choi matrices, duals, reversal, gauge action;
//! - [`verify`]: predicate suite (trace preservation, positivity and isometry
//!   probes, complete positivity, spectral fingerprint);
//! - [`decompose`]: the constructive decomposition pipeline (fingerprint →
//!   band projections → linear/antilinear split → rail projections → pure
//!   component extraction);
//! - [`files`]: the on-disk channel/state formats used by the CLI.

pub mod channel;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod files;
pub mod linops;
pub mod sample;
pub mod verify;

pub use error::{Error, Result};

/// Numerical tolerances used across the verification and decomposition
/// pipeline. Defaults are the contract; every stage records its actual
/// residual in the reports.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Max-norm residual of T*(I) − I accepted as trace preserving.
    pub trace_preserving: f64,
    /// Most negative probe-output eigenvalue accepted as positive.
    pub positivity: f64,
    /// Orthogonality/dual-support defect accepted on isometry probes.
    pub isometry_defect: f64,
    /// Min Choi eigenvalue accepted as completely positive.
    pub complete_positivity: f64,
    /// Relative gap separating distinct fingerprint weights.
    pub cluster_rel_gap: f64,
    /// Block-diagonality residual accepted for band projections.
    pub band_block_residual: f64,
    /// Probe residual accepted for the mixing-channel invariant.
    pub mixing_invariant: f64,
    /// How far the split operator's eigenvalues may sit from ±i.
    pub spectral_split_window: f64,
    /// Pairwise orthogonality defect accepted for projector families.
    pub orthogonality: f64,
    /// Probe residual accepted when replaying an extracted pure component.
    pub extraction_residual: f64,
    /// Max-norm error accepted between input and reconstructed channel.
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace_preserving: 1e-8,
            positivity: 1e-9,
            isometry_defect: 1e-8,
            complete_positivity: 1e-9,
            cluster_rel_gap: 1e-6,
            band_block_residual: 1e-8,
            mixing_invariant: 1e-8,
            spectral_split_window: 1e-4,
            orthogonality: 1e-9,
            extraction_residual: 1e-7,
            reconstruction: 1e-8,
        }
    }
}
