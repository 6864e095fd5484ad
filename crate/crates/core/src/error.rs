use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the range its quantity allows.
    #[error("{name} = {value} is out of range (expected {expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("no finite path length attenuates to transmittance {transmittance} when k = 0")]
    NoFinitePath { transmittance: f64 },

    #[error("calibration has no solution: {0}")]
    NoSolution(String),

    #[error("profile table line {line}: {message}")]
    ProfileParse { line: usize, message: String },

    #[error("no atmosphere profile for {0}")]
    UnknownProfile(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
