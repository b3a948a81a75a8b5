//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by domain constructors, evaluators, and experiments.
#[derive(Debug, Clone, Error)]
pub enum LabError {
    /// Domain parameters violate a constructor precondition.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A point was evaluated outside the (open) domain it belongs to.
    #[error("point outside domain: {0}")]
    OutsideDomain(String),

    /// Evaluation landed on a branch cut of a principal-branch power.
    #[error("branch cut hit: {0}")]
    BranchCut(String),

    /// Vector lengths disagree with the product dimension.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration value is unusable (empty schedule, zero grid, ...).
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The optimizer failed to produce any feasible candidate.
    #[error("no feasible candidate: {0}")]
    Infeasible(String),

    /// A requested closed form does not exist for the given domain.
    #[error("no closed form: {0}")]
    NoClosedForm(String),

    /// Leaf tracing broke down (degenerate w-gradient or lost surface).
    #[error("trace failed: {0}")]
    TraceFailed(String),

    /// Normalization input fails its harmonicity precondition.
    #[error("normal direction field is not harmonic: {0}")]
    NotHarmonic(String),

    /// Numerical derivative unavailable for the requested object.
    #[error("derivative unavailable: {0}")]
    NoDerivative(String),
}

/// Result alias used by every fallible routine in the crate.
pub type LabResult<T> = Result<T, LabError>;
