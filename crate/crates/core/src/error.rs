use thiserror::Error;

/// Invalid parameters, rejected before any computation starts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("lattice needs at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("lattice needs at least one atom")]
    NoAtoms,
    #[error("tunneling amplitude must be positive, got {0}")]
    NonPositiveTunneling(f64),
    #[error("interaction strength must be finite, got {0}")]
    NonFiniteInteraction(f64),
    #[error("expected {expected} sites, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("expected {expected} atoms, found {found}")]
    AtomCountMismatch { expected: usize, found: usize },
    #[error("Fock space dimension {dimension} exceeds the budget of {budget}")]
    DimensionBudget { dimension: u128, budget: u128 },
    #[error("checkerboard decomposition needs an even number of sites, got {0}")]
    OddSites(usize),
    #[error("invalid sampler setting: {0}")]
    Sampler(String),
    #[error("invalid solver setting: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("non-finite amplitude encountered at t = {time}")]
    NonFinite { time: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },
    #[error("no degenerate ground states available for the mixture")]
    EmptyMixture,
    #[error("degenerate ground manifold may extend beyond the {computed} computed states")]
    IncompleteDegenerateSet { computed: usize },
    #[error("acceptance rate {0:e} after thermalization is pathologically low")]
    PathologicalAcceptance(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
