//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation and analysis modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("optical power must be non-negative, got {0} W")]
    NegativePower(f64),
    #[error("dBm is undefined for zero optical power")]
    ZeroPowerDbm,
    #[error("wavelength must be positive, got {0} m")]
    InvalidWavelength(f64),
    #[error("rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("mean photon number must be non-negative, got {0}")]
    NegativeMeanPhotons(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityDomain(f64),
    #[error("QBER {0} outside [0, 0.5]")]
    QberDomain(f64),
    #[error("drive current {current} mA outside [0, {max}] mA")]
    CurrentOutOfRange { current: f64, max: f64 },
    #[error("emitter produces no light at this operating point")]
    NoEmission,
    #[error("L-I table invalid: {0}")]
    InvalidLiTable(String),
    #[error("filter ratio {0} outside (0, 1]")]
    InvalidFilterRatio(f64),
    #[error("histogram needs at least {min} bins, got {got}")]
    TooFewBins { min: usize, got: usize },
    #[error("period must be positive, got {0} s")]
    InvalidPeriod(f64),
    #[error("no counts in tag stream")]
    NoSignal,
    #[error("sweep needs at least 3 frequencies, sorted ascending")]
    InvalidSweep,
    #[error("response never crosses -3 dB within the sweep range")]
    CutoffOutOfRange,
    #[error("no sifted records to estimate from")]
    EmptySift,
    #[error("frame synchronization not locked (peak {peak:.3} < threshold {threshold:.3})")]
    SyncNotLocked { peak: f64, threshold: f64 },
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("bad time-tag file: {0}")]
    TagFormat(String),
    #[error("bad pattern file: {0}")]
    PatternFormat(String),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
