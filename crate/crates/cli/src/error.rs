use std::path::PathBuf;

use thiserror::Error;
use tracebounds::krylov::KrylovError;
use tracebounds::linalg::LinalgError;
use tracebounds::poly::PolyError;
use tracebounds::trace::TraceError;
use tracebounds::wishart::WishartError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    /// 0 success, 2 usage, 3 failed check or certificate, 4 I/O or parse,
    /// 1 any other numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) => 3,
            CliError::Io { .. } | CliError::Parse { .. } => 4,
            CliError::Compute(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        match e {
            PolyError::CertificateViolation { .. } => CliError::Check(e.to_string()),
            PolyError::InvalidInterval { .. } | PolyError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<WishartError> for CliError {
    fn from(e: WishartError) -> Self {
        match e {
            WishartError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Poly(p) => p.into(),
            TraceError::NoProbes | TraceError::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<KrylovError> for CliError {
    fn from(e: KrylovError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Compute(e.to_string())
    }
}
