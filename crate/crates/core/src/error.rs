use thiserror::Error;

/// Errors raised by model construction, simulation, and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter of a specific agent violates its invariant.
    #[error("agent {index}: {message}")]
    InvalidAgent { index: usize, message: &'static str },

    /// A game-level parameter violates its invariant.
    #[error("{0}")]
    InvalidParams(&'static str),

    /// An agent index outside `0..n_agents`.
    #[error("agent index {index} out of range for {n_agents} agents")]
    AgentIndex { index: usize, n_agents: usize },

    /// A depletion rate that is not strictly positive and finite.
    #[error("depletion rate must be positive and finite, got {0}")]
    InvalidRate(f64),

    /// A strategy profile whose length does not match the number of agents.
    #[error("strategy profile has {profile} rates but the game has {n_agents} agents")]
    ProfileLength { profile: usize, n_agents: usize },

    /// A state value that must be strictly positive.
    #[error("state value must be positive, got {0}")]
    NonPositiveState(f64),

    /// A tax outside the admissible domain `[0, inf)`.
    #[error("tax must be non-negative and finite, got {0}")]
    InvalidTax(f64),

    /// An operation that requires identical agents got heterogeneous ones.
    #[error("operation requires homogeneous agents: {0}")]
    Heterogeneous(&'static str),

    /// The Hamiltonian has no interior maximizer for this costate.
    #[error("no maximizer: requires a positive marginal value, got {0}")]
    NoMaximizer(f64),

    /// An invalid time grid.
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),

    /// A simulation request exceeding the in-memory ensemble limit.
    #[error("ensemble of {requested} values exceeds the in-memory limit of {limit}")]
    EnsembleTooLarge { requested: usize, limit: usize },

    /// An index into a path ensemble that is out of bounds.
    #[error("ensemble index out of range: {0}")]
    EnsembleIndex(&'static str),

    /// An invalid discrete measure.
    #[error("invalid measure: {0}")]
    InvalidMeasure(&'static str),

    /// A generic invalid argument with context.
    #[error("{0}")]
    InvalidArgument(&'static str),

    /// Best-response bracketing failed; the payoff is strictly concave, so
    /// this indicates an implementation bug rather than a model property.
    #[error("best-response bracket failed for agent {agent}")]
    BracketFailure { agent: usize },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
