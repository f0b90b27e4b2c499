//! Error type shared by all modules.

/// Errors produced by kernel construction, solvers and verification drivers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The kernel is not transient; the potential kernel `Σ Pᵏ` would be
    /// infinite somewhere.
    #[error("kernel not transient: spectral radius estimate {rho:.12} >= 1 - 1e-10")]
    NotTransient {
        /// Power-iteration estimate of the spectral radius.
        rho: f64,
    },

    /// A killed sub-system is not solvable (killed kernel not transient).
    #[error("exit system not solvable: {0}")]
    NotSolvable(String),

    /// Quadrature or iteration failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The semilinear solver stalled; diagnostics in the message.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// A quantity that the theory forces to be monotone or bounded was not,
    /// beyond tolerance.
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    /// A theorem check failed on a concrete instance; the offending instance
    /// is serialized into the message.
    #[error("verification failure: {0}")]
    VerificationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
