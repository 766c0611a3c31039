use thiserror::Error;

/// Errors raised by model construction, solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mass must be finite and positive, got {0}")]
    InvalidMass(f64),

    #[error("component {component}: potential needs degree N >= 2 with positive leading coefficient")]
    DegenerateNonlinearity { component: usize },

    #[error("component {component}: linear coupling a = {a} must be below 2m = {two_m}")]
    LinearCouplingTooLarge { component: usize, a: f64, two_m: f64 },

    #[error("operation requires {expected} mode")]
    WrongMode { expected: &'static str },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("local window R = {r} must satisfy 0 < R <= L = {half_length}")]
    RWindowTooLarge { r: f64, half_length: f64 },

    #[error("frequency {omega} lies outside the open gap (-{m}, {m})")]
    OmegaOutsideGap { omega: f64, m: f64 },

    #[error("Green function evaluated at the branch point omega = {omega}")]
    BranchPoint { omega: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFiniteValue { t: f64 },

    #[error("relative energy drift {drift:e} exceeds tolerance {tolerance:e} at t = {t}")]
    EnergyDriftExceeded { drift: f64, tolerance: f64, t: f64 },

    #[error("trace resolution too coarse: {0}")]
    TraceResolutionTooCoarse(String),

    #[error("window holds {samples} samples, at least {required} required")]
    WindowTooShort { samples: usize, required: usize },

    #[error("no spectral peak inside the gap")]
    NoGapPeak,

    #[error("unknown initial data spec: {0}")]
    UnknownSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("field length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
