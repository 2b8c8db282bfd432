use std::path::{Path, PathBuf};

use cagewarp_core::cage::CageError;
use cagewarp_core::field::FieldError;
use cagewarp_core::render::RenderError;
use cagewarp_core::session::SessionError;
use cagewarp_core::warp::WarpError;
use thiserror::Error;

/// CLI failure, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("compute error: {0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse(_) => 4,
            CliError::Validation(_) => 5,
            CliError::Compute(_) => 6,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn parse_in(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{}: {err}", path.display()))
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Io { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            FieldError::Header(_) | FieldError::PayloadMismatch { .. } => CliError::Parse(e.to_string()),
            FieldError::Invalid { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CageError> for CliError {
    fn from(e: CageError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<WarpError> for CliError {
    fn from(e: WarpError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Io { path, source } => CliError::Io { path, source },
            RenderError::Json { .. } | RenderError::Payload { .. } => CliError::Parse(e.to_string()),
            RenderError::Camera(_) | RenderError::Settings(_) | RenderError::DimensionMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            RenderError::Png(_) => CliError::Compute(e.to_string()),
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Cage(e) => e.into(),
            SessionError::Warp(e) => e.into(),
            SessionError::Field(e) => e.into(),
            SessionError::Render(e) => e.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}
