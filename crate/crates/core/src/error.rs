use thiserror::Error;

/// Errors raised by the solver layers. Configuration and checkpoint
/// problems have their own types and are wrapped here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("fields live on different lattices")]
    LatticeMismatch,

    #[error("physical grid has {got} points per component, lattice expects {expected}")]
    GridSize { expected: usize, got: usize },

    #[error("oracle refuses N = {0} (cost guard allows N <= 16)")]
    CostGuard(usize),

    #[error("exponent triple ({0}, {1}, {2}) violates the trilinear bound hypotheses")]
    Hypothesis(f64, f64, f64),

    #[error("zero norm in bound-ratio denominator")]
    DegenerateDenominator,

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("blow-up at t = {t}: |u|_0 = {norm:e} exceeds {limit:e}")]
    BlowUp { t: f64, norm: f64, limit: f64 },

    #[error("advection series has {got} samples, need at least {needed}")]
    SampleCount { needed: usize, got: usize },

    #[error("time step mismatch: {0} vs {1}")]
    StepMismatch(f64, f64),

    #[error("time {t} is not a multiple of dt = {dt}")]
    OffGrid { t: f64, dt: f64 },

    #[error("delay mu = {mu} is not a positive integer multiple of dt = {dt}")]
    DelayNotMultiple { mu: f64, dt: f64 },

    #[error("trajectory does not hold the samples needed at t = {0}")]
    MissingSamples(f64),

    #[error("{0}")]
    Study(String),

    #[error(transparent)]
    Config(#[from] crate::io::config::ConfigError),

    #[error(transparent)]
    Checkpoint(#[from] crate::io::checkpoint::CheckpointError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the time integration itself (as opposed to bad input).
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
