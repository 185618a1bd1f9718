use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported graph `{0}` (expected tetrahedron, cube or octahedron)")]
    UnsupportedGraph(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid scaling point: N' = {n_prime} < N = {n}")]
    InvalidScalingPoint { n: usize, n_prime: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("coincident atoms {0} and {1}")]
    CoincidentAtoms(usize, usize),

    #[error("non-positive parameter `{name}` = {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("parameter `{name}` = {value} outside [0, 1]")]
    NotAProbability { name: &'static str, value: f64 },

    #[error("basis index {index} out of range 1..={max}")]
    IndexOutOfRange { index: u64, max: u64 },

    #[error("invalid spin configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} limited to {max} atoms, got {got}")]
    TooManyAtoms { what: &'static str, max: usize, got: usize },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("time {t} us outside schedule [0, {tf}]")]
    TimeOutOfRange { t: f64, tf: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("input is not normalized (total probability {0})")]
    Unnormalized(f64),

    #[error("wire length {0} is odd")]
    OddWireLength(usize),

    #[error("no events survive post-selection ({raw:?} raw events, total weight {raw_weight})")]
    EmptyPostselection { raw: Option<u64>, raw_weight: f64 },

    #[error("P_g' equals P_others; the shot-count criterion is unbounded")]
    UnboundedShots,

    #[error("need at least two distinct scaling points")]
    TooFewPoints,

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedGraph(_) => "unsupported_graph",
            Error::InvalidGraph(_) => "invalid_graph",
            Error::InvalidScalingPoint { .. } => "invalid_scaling_point",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::CoincidentAtoms(..) => "coincident_atoms",
            Error::NonPositive { .. } => "non_positive",
            Error::NotAProbability { .. } => "not_a_probability",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InvalidConfig(_) => "invalid_config",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooManyAtoms { .. } => "too_many_atoms",
            Error::NoConvergence(_) => "no_convergence",
            Error::TimeOutOfRange { .. } => "time_out_of_range",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::Unnormalized(_) => "unnormalized",
            Error::OddWireLength(_) => "odd_wire_length",
            Error::EmptyPostselection { .. } => "empty_postselection",
            Error::UnboundedShots => "unbounded_shots",
            Error::TooFewPoints => "too_few_points",
            Error::Format(_) => "format",
        }
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

pub(crate) fn probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::NotAProbability { name, value })
    }
}
