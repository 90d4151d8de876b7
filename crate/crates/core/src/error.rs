//! Error type shared across the crate.

use crate::algebra::CMatrix;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input fell outside the mathematical domain of an operation
    /// (non-finite argument, modulus outside [0, 1], invalid parameter).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two operators of different dimensions were combined.
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A matrix failed the Hermiticity check. Inputs are rejected rather
    /// than symmetrized so that construction bugs stay visible.
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    /// The quarter period K(k) diverges in the k -> 1 limit.
    #[error("quarter period diverges at k = 1")]
    DivergentPeriod,

    /// A generating set handed to a linear-map constructor was numerically
    /// rank deficient.
    #[error("generators are linearly dependent: relative smallest singular value {sigma:.3e} below {tol:.3e}")]
    DependentGenerators { sigma: f64, tol: f64 },

    /// The commutator algebra of a candidate operator tuple does not close
    /// in the required form. `relation` names the first relation that failed.
    #[error("commutation relations do not close: {relation} has relative residual {residual:.3e} (tolerance {tol:.3e})")]
    ClosureFailure {
        relation: &'static str,
        residual: f64,
        tol: f64,
    },

    /// Structure constants came out in a configuration where the closed
    /// formulas of the solution family are undefined.
    #[error("degenerate structure constants: {0}")]
    DegenerateConstants(String),

    /// The projected coefficient equations were inconsistent beyond
    /// tolerance, or their solution family had an unexpected shape.
    #[error("coefficient derivation failed: {0}")]
    DerivationFailure(String),

    /// Adaptive step-size control underflowed. The last accepted state and
    /// time are carried so callers can inspect how far integration got.
    #[error("integration failed at t = {t}: step size underflow")]
    IntegrationFailure { t: f64, last_state: Box<CMatrix> },

    /// The gauge covariance condition does not hold along the trajectory.
    #[error("gauge transform invalid: covariance defect {defect:.3e} at t = {t} exceeds {tol:.3e}")]
    GaugeInvalid { t: f64, defect: f64, tol: f64 },

    /// An iterative kernel failed to converge. Indicates a bug or an input
    /// far outside the intended regime; never expected on valid data.
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}
