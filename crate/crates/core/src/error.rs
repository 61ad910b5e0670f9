use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set or scenario violates its invariants.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller-supplied data (tables, fleets, grids) is malformed.
    #[error("invalid input: {0}")]
    Input(String),

    /// A rotor dropped below its minimum allowable speed.
    #[error("rotor-security violation: unit `{unit}` reached {omega_r:.6} pu < {omega_r_min} pu at t = {t:.4} s")]
    RotorSecurity {
        unit: String,
        t: f64,
        omega_r: f64,
        omega_r_min: f64,
    },

    /// A requested rotor-speed excursion would cross the minimum speed.
    #[error("rotor-security error: requested excursion {requested:.6} pu exceeds the available margin {margin:.6} pu")]
    ExcursionTooLarge { requested: f64, margin: f64 },

    #[error("integration blow-up: {0}")]
    IntegrationBlowup(String),

    /// The closed-form nadir only covers the underdamped regime.
    #[error("unsupported regime: damping ratio {xi:.6} >= 1")]
    UnsupportedRegime { xi: f64 },

    #[error("probe {probe} pu is not smaller than the event size {event} pu")]
    ProbeTooLarge { probe: f64, event: f64 },

    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
