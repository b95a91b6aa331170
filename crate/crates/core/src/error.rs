use thiserror::Error;

/// Errors produced by constructors and operations in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// All raw matrix elements vanish; no final state can be normalized.
    #[error("degenerate amplitudes: all matrix elements are zero")]
    DegenerateAmplitudes,

    /// An amplitude or probability vector has fewer than two channels.
    #[error("need at least two channels, got {0}")]
    TooFewChannels(usize),

    /// A vector that must be normalized is not.
    #[error("norm deviates from 1 by {0:.3e}, beyond tolerance")]
    NotNormalized(f64),

    /// Two-body kinematics below the production threshold.
    #[error("below threshold: m0 = {m0} does not exceed m1 + m2 = {m_sum}")]
    BelowThreshold { m0: f64, m_sum: f64 },

    /// A matrix failed a density-matrix invariant (hermiticity, trace,
    /// positive semidefiniteness).
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Exact enumeration was requested for a channel count it cannot handle.
    #[error("n too large for enumeration: {n} exceeds the limit {limit}")]
    EnumerationTooLarge { n: usize, limit: usize },

    /// The photon momentum is orthogonal to the emitter momentum.
    #[error("collinear singularity: p.k = 0")]
    CollinearSingularity,

    /// Every channel distribution vanishes at the requested pointer value.
    #[error("unreachable pointer: outcome distribution is zero there")]
    UnreachablePointer,

    /// An operation that needs samples received none.
    #[error("no data")]
    NoData,
}
