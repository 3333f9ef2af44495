use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is defective at the exceptional point (v = {v}, gamma = {gamma})")]
    ExceptionalPoint { v: f64, gamma: f64 },

    #[error("state has zero norm")]
    ZeroState,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("beam reached the chain boundary at t = {time} (edge density {density:e})")]
    EdgeDensity { time: f64, density: f64 },

    #[error("beam support [{low}, {high}] does not fit inside the chain [{first}, {last}]")]
    BeamOutsideChain { low: f64, high: f64, first: i64, last: i64 },

    #[error("expected two prominent density peaks, found {found}")]
    PeakDetection { found: usize },

    #[error("momentum grid with {n_k} points is too coarse for {n_sites} sites")]
    GridTooCoarse { n_k: usize, n_sites: usize },

    #[error("momentum grid size must be even and positive, got {0}")]
    OddGrid(usize),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("force must be nonzero")]
    ZeroForce,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of the numerics (integration, peak detection,
    /// boundary hits) as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::EdgeDensity { .. }
                | Error::PeakDetection { .. }
                | Error::ExceptionalPoint { .. }
        )
    }
}

pub(crate) fn require_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {x}")))
    }
}

pub(crate) fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
    }
}
