use thiserror::Error;

/// Errors surfaced by the simulation and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Cookie strengths must lie strictly inside (0, 1).
    #[error("cookie strength at index {index} is {value}; must lie strictly in (0, 1)")]
    InvalidCookie { index: usize, value: f64 },

    /// Failed to parse a comma-separated decimal environment string.
    #[error("cannot parse cookie environment entry {entry:?}: {reason}")]
    ParseEnvironment { entry: String, reason: String },

    /// A trial scan passed the hard per-site cap without resolving.
    #[error("per-site trial cap of 2^32 exceeded at site {site}")]
    TrialCapExceeded { site: i64 },

    /// A coupling table failed one of its construction invariants.
    #[error("invalid coupling table: {0}")]
    InvalidCouplingTable(String),

    /// Outcome-space budget for the coupling order decision.
    #[error("environment length {len} exceeds the coupling budget of {max}")]
    CouplingBudgetExceeded { len: usize, max: usize },

    /// Operation requires a ({Strict}, {Equal}) order verdict.
    #[error("environments are not coupling-comparable: {0}")]
    NotComparable(String),

    /// Hypothesis of the requested computation is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Iterative solver failed to reach its tolerance.
    #[error("solver did not converge: {reason} (last bracket/change {last:?})")]
    NonConvergence { reason: String, last: Option<f64> },

    /// Enumeration budget exceeded for an exact oracle.
    #[error("exact enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Unknown experiment or suite name.
    #[error("unknown experiment or suite {0:?}")]
    UnknownExperiment(String),

    /// Walk did not resolve the requested event within the step cap.
    #[error("walk exceeded {cap} steps before resolving {event}")]
    WalkCapExceeded { cap: u64, event: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
