use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("invalid data profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hilbert determinant requested for d = {0}, supported range is 1..=12")]
    HilbertDimension(usize),

    #[error("degenerate moment matrix: det M({a}) = {det}")]
    DegenerateMoment { a: f64, det: f64 },

    #[error(
        "profile support exceeds grid on axis {axis}: need [{need_lo}, {need_hi}], grid interior is [{have_lo}, {have_hi}]"
    )]
    SupportExceedsGrid {
        axis: usize,
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },

    #[error("CFL violation: sum of dt*speed/h = {number} exceeds {limit}")]
    CflViolation { number: f64, limit: f64 },

    #[error("support reached the boundary at t = {t} on axis {axis}; {hint}")]
    BoundaryContact { t: f64, axis: usize, hint: String },

    #[error("entropy {0} is only defined for nonnegative states, got {1}")]
    EntropyDomain(String, f64),

    #[error("missing series: {0}")]
    MissingSeries(String),

    #[error("fit window [{t0}, {t1}] holds {samples} positive samples, need at least {needed}")]
    WindowTooShort {
        t0: f64,
        t1: f64,
        samples: usize,
        needed: usize,
    },

    #[error("nonpositive value {value} at t = {t} in power-law fit window")]
    NonPositive { t: f64, value: f64 },

    #[error("snapshot format: {0}")]
    Snapshot(String),
}
