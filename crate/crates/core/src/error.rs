use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Format(String),
    #[error("unsupported audio encoding: {0}")]
    UnsupportedFormat(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid audio data: {0}")]
    Data(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("T60 of {requested:.4} s is not achievable in this room (minimum {minimum:.4} s)")]
    InfeasibleT60 { requested: f64, minimum: f64 },
    #[error("impulse response has only {range_db:.1} dB of measurable decay (need 20 dB)")]
    InsufficientDecay { range_db: f64 },
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("noise chunk pool is empty")]
    NoNoiseAvailable,
    #[error("noise has zero power; cannot mix at a finite SNR")]
    DegenerateNoise,
    #[error("signal has zero energy: {0}")]
    DegenerateSignal(String),
    #[error("scenario sampler gave up after {0} attempts")]
    Sampler(usize),
    #[error("input too short: {frames} STFT frames, need more than {required}")]
    InsufficientFrames { frames: usize, required: usize },
}

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Io,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Config(_) | Error::Geometry(_) | Error::InfeasibleT60 { .. } | Error::Sampler(_) => {
                ErrorClass::Config
            }
            _ => ErrorClass::Data,
        }
    }
}
