use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon number {n} outside the truncated space (n_max = {n_max})")]
    Cutoff { n: usize, n_max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has zero norm and cannot be normalized")]
    NotNormalizable,

    #[error("state is not normalized (norm^2 = {norm_sq})")]
    Unnormalized { norm_sq: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("step size {dt} violates the stability guard (dt * max rate = {product} > 0.1)")]
    Stability { dt: f64, product: f64 },

    #[error("detection on the {channel} channel is impossible from this state")]
    ImpossibleDetection { channel: &'static str },

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("singular linear system")]
    Singular,

    #[error("invalid ramp schedule: {0}")]
    InvalidSchedule(String),

    #[error("empty grid")]
    EmptyGrid,
}

impl Error {
    /// Stable machine-readable category used in reports.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Cutoff { .. } => "cutoff",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotNormalizable => "not_normalizable",
            Error::Unnormalized { .. } => "unnormalized",
            Error::InvalidParams { .. } => "invalid_params",
            Error::Stability { .. } => "stability",
            Error::ImpossibleDetection { .. } => "impossible_detection",
            Error::NegativeTime(_) => "negative_time",
            Error::Singular => "singular",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::EmptyGrid => "empty_grid",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
