//! Command implementations and the HTTP service behind the `urbankit` binary.
//!
//! Every command returns a [`Failure`] on error; its exit code is 1 for
//! invalid input (diagnostics) and 2 for I/O failures.

pub mod commands;
pub mod fetch;
pub mod server;

use std::fmt;

use urbankit::grammar::Diagnostic;
use urbankit::ingest::IngestError;
use urbankit::layer::LayerError;
use urbankit::shadow::ShadowError;
use urbankit::KnotError;

#[derive(Debug)]
pub enum Failure {
    /// Validation produced errors; warnings are included.
    Diagnostics(Vec<Diagnostic>),
    Invalid(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Failure {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Diagnostics(d) => {
                let lines: Vec<String> = d.iter().map(|d| d.to_string()).collect();
                f.write_str(&lines.join("\n"))
            }
            Failure::Invalid(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

impl From<LayerError> for Failure {
    fn from(e: LayerError) -> Failure {
        match e {
            LayerError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Failure {
        match e {
            IngestError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<KnotError> for Failure {
    fn from(e: KnotError) -> Failure {
        match e {
            KnotError::Invalid(d) => Failure::Diagnostics(d),
            KnotError::Layer(l) => l.into(),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<ShadowError> for Failure {
    fn from(e: ShadowError) -> Failure {
        Failure::Invalid(e.to_string())
    }
}
