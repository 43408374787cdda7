use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter {value} lies outside the {chart} chart domain")]
    Domain { chart: &'static str, value: f64 },

    #[error("representation failed validation: {0}")]
    InvalidRepresentation(String),

    #[error("character basis rejected: {0}")]
    BasisRejected(String),

    #[error("v0 is not fixed by the subgroup: residual {residual:e} at g={g}, h={h}")]
    NotHFixed { g: f64, h: f64, residual: f64 },

    #[error("need at least {needed} group samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("pair is not cyclic (orbit rank {rank} < dim {dim})")]
    NotCyclic { rank: usize, dim: usize },

    #[error("evaluation grid too small: rank {rank} < {needed}; enlarge the grid")]
    GridTooSmall { rank: usize, needed: usize },

    #[error("function space is not L_G-invariant on this grid (residual {residual:e} at g={g})")]
    NotInvariant { g: f64, residual: f64 },

    #[error("theta outside the natural parameter space: {0}")]
    OutsideTheta(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("quantile search failed: {0}")]
    RootFinding(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
