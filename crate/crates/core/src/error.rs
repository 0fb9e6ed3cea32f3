use thiserror::Error;

/// Errors produced by the broadcast-coding toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative coefficient {value} at degree {degree} in {side}")]
    NegativeCoefficient {
        side: &'static str,
        degree: usize,
        value: f64,
    },
    #[error("{side} coefficients sum to {sum}, outside 1 +/- {tolerance}")]
    SumOutOfTolerance {
        side: &'static str,
        sum: f64,
        tolerance: f64,
    },
    #[error("degree {degree} in {side} is below 2")]
    DegreeBelowTwo { side: &'static str, degree: usize },
    #[error("variable degree {degree} exceeds max_var_degree {max}")]
    DegreeAboveMax { degree: usize, max: usize },
    #[error("degree counts cannot be balanced: {0}")]
    InfeasibleRounding(String),
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("negative SNR {0}")]
    NegativeSnr(f64),
    #[error("negative parameter {0}")]
    NegativeParameter(f64),
    #[error("density grid too coarse: {leaked:e} of the mass leaked")]
    GridTooCoarse { leaked: f64 },
    #[error("density has {0} bins, not a symmetric grid")]
    AsymmetricGrid(usize),
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("integration not converged: refinement changed the value by {change:e}")]
    IntegrationNotConverged { change: f64 },
    #[error("threshold not bracketed: converged(lo)={lo_converges}, converged(hi)={hi_converges}")]
    NotBracketed {
        lo_converges: bool,
        hi_converges: bool,
    },
    #[error("seed degree distribution does not converge on the design channel")]
    SeedDoesNotConverge,
    #[error("linear program infeasible (binding stage {stage:?})")]
    LpInfeasible { stage: Option<usize> },
    #[error("linear program solver failed: {0}")]
    LpSolver(String),
    #[error("code construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
