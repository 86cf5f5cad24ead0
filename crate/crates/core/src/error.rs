//! Error taxonomy shared by every module.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A user callback (`h`, `∇h`, `f`, `g`, `γ`) returned a non-finite value.
    #[error("evaluation of {what} returned a non-finite value at {point:?}")]
    Eval { what: &'static str, point: Vec<f64> },

    /// An argument lies outside the domain an operation is defined on
    /// (e.g. a state outside `S` handed to a tangent-cone projection).
    #[error("domain violation: {0}")]
    Domain(String),

    /// `∇h = 0` at a point where the constraint is active.
    #[error("regularity violation: {0}")]
    Regularity(String),

    /// The requested constrained minimization has an empty feasible set.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A numerical search (boundary bracketing, inverse-γ bisection,
    /// witness construction) failed to produce a value.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// An iterative projection exceeded its iteration budget.
    #[error("projection failed: {0}")]
    Projection(String),

    /// Inconsistent or invalid configuration (dimensions, scheme/kind
    /// pairing, empty grids, unknown names).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A documented operation precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn eval(what: &'static str, point: &nalgebra::DVector<f64>) -> Self {
        Error::Eval {
            what,
            point: point.iter().copied().collect(),
        }
    }
}
