use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cutoff {cutoff} too small: truncated tail mass {tail:.3e} exceeds {bound:.1e}")]
    CutoffTooSmall { cutoff: usize, tail: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("eigendecomposition did not converge")]
    ConvergenceFailure,

    #[error("state has no eigenvalue above the support floor")]
    ZeroState,

    #[error("operator has weight {leak:.3e} outside the support of the state")]
    SupportDeficient { leak: f64 },

    #[error("state has weight {weight:.3e} within two photons of the cutoff")]
    SupportTooHigh { weight: f64 },

    #[error("empty subset")]
    EmptySubset,

    #[error("quadrature needs {requested} nodes, budget is {budget}")]
    QuadratureBudgetExceeded { requested: usize, budget: usize },

    #[error("superoperator exponential limited to cutoff {max}, got {cutoff}")]
    ExpmDimensionLimit { cutoff: usize, max: usize },

    #[error("unsupported classical mix: {0}")]
    UnsupportedMix(String),

    #[error("characteristic function decays too slowly: |chi| = {value:.3e} at radius {radius}")]
    SlowDecay { radius: f64, value: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}
