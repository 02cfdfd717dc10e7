use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate stencil")]
    DegenerateStencil,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("operation requires a fully periodic grid")]
    NonPeriodic,
    #[error("target too coarse: {0}")]
    TargetTooCoarse(String),
    #[error("invalid forcing: {0}")]
    InvalidForcing(String),
    #[error("incompatible source: mean {mean:e} exceeds tolerance {tol:e}")]
    IncompatibleSource { mean: f64, tol: f64 },
    #[error("penalty below threshold: mu = {mu} <= ||g||_inf = {g_inf}")]
    PenaltyBelowThreshold { mu: f64, g_inf: f64 },
    #[error("grid too large for exhaustive enumeration: {cells} cells (limit {limit})")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("no admissible multiplier found; nearest lambda {nearest_lambda} at volume {nearest_volume}")]
    NoAdmissibleMultiplier { nearest_lambda: f64, nearest_volume: f64 },
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("insufficient directions: {got} sampled, {need} required")]
    InsufficientDirections { got: usize, need: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
