use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled at {fire_at:.3}s is earlier than the clock ({now:.3}s)")]
    Causality { fire_at: f64, now: f64 },
    #[error("random bound must be at least 1")]
    ZeroBound,
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
    #[error("vehicle {id} cannot halt while {state}")]
    CannotHalt { id: u32, state: &'static str },
    #[error("no trust input present")]
    NoTrustInput,
    #[error("no finished vehicles")]
    NoFinishedVehicles,
    #[error("config errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
