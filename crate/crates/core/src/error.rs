use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain needs at least 3 sites, got {0}")]
    TooFewSites(usize),

    #[error("expected {expected} bond couplings, got {got}")]
    BondCountMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} lies outside the protocol window [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("division hazard at t = {t}: omega^2 = {omega_sq:e} below floor {floor:e} while d2Xc/dt2 = {xc_accel:e}")]
    DivisionHazard {
        t: f64,
        omega_sq: f64,
        floor: f64,
        xc_accel: f64,
    },

    #[error("state length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("norm drift {drift:e} at t = {t} exceeds 1e-6; reduce the step (dt = {dt})")]
    NormDrift { t: f64, drift: f64, dt: f64 },

    #[error("non-finite amplitude at t = {t}")]
    NonFinite { t: f64 },

    #[error("Lanczos did not converge in {iterations} iterations at t = {t} (dt = {dt}); reduce the step")]
    KrylovNotConverged { t: f64, dt: f64, iterations: usize },

    #[error("step-halving check failed: fidelity between dt and dt/2 final states is {fidelity}, need >= {required}")]
    StepHalving { fidelity: f64, required: f64 },

    #[error("time grids do not overlap: {0}")]
    GridMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config {path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
