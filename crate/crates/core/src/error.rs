use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid species definition: {0}")]
    Species(String),

    #[error("invalid system: {0}")]
    System(String),

    #[error("sites of molecules {0} and {1} overlap at zero separation")]
    Overlap(usize, usize),

    #[error("non-finite {quantity} on molecule {molecule} at step {step}: {dump}")]
    NonFinite {
        quantity: &'static str,
        molecule: usize,
        step: u64,
        dump: String,
    },

    #[error("thermostat: {0}")]
    Thermostat(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("restore failed: {0}")]
    Restore(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
