use std::path::Path;

use thiserror::Error;

use crate::certificates::CertError;
use crate::decomposer::DecomposeError;
use crate::matcore::MatError;
use crate::metrics::MetricsError;
use crate::separation::SepError;
use crate::trainer::TrainError;
use crate::universal::UnivError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Schema(String),
    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
    #[error("{context}: {message}")]
    Module { context: String, message: String, numeric: bool },
}

impl HarnessError {
    pub(super) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub(super) fn module<E: Numeric>(context: &str, e: E) -> Self {
        HarnessError::Module { context: context.into(), numeric: e.is_numeric(), message: e.to_string() }
    }

    /// 1 for invalid input or configuration, 2 for numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Module { numeric: true, .. } => 2,
            _ => 1,
        }
    }
}

/// Whether an error reflects a numeric failure rather than bad input.
pub trait Numeric: std::fmt::Display {
    fn is_numeric(&self) -> bool;
}

impl Numeric for MatError {
    fn is_numeric(&self) -> bool {
        matches!(self, MatError::SingularMatrix { .. } | MatError::EigFailed | MatError::EigGapTooSmall { .. } | MatError::NonFinite)
    }
}

impl Numeric for MetricsError {
    fn is_numeric(&self) -> bool {
        matches!(self, MetricsError::NonFinite)
    }
}

impl Numeric for DecomposeError {
    fn is_numeric(&self) -> bool {
        match self {
            DecomposeError::SingularMatrix | DecomposeError::SpectrumMismatch { .. } | DecomposeError::ZeroDiagonal(_) | DecomposeError::ZeroScale => true,
            DecomposeError::Mat(e) => e.is_numeric(),
            _ => false,
        }
    }
}

impl Numeric for TrainError {
    fn is_numeric(&self) -> bool {
        match self {
            TrainError::DivergedRun { .. } => true,
            TrainError::Mat(e) => e.is_numeric(),
            _ => false,
        }
    }
}

impl Numeric for CertError {
    fn is_numeric(&self) -> bool {
        match self {
            CertError::SingularBlock => true,
            CertError::Mat(e) => e.is_numeric(),
            CertError::Train(e) => e.is_numeric(),
            _ => false,
        }
    }
}

impl Numeric for UnivError {
    fn is_numeric(&self) -> bool {
        match self {
            UnivError::Mat(e) => e.is_numeric(),
            UnivError::Metrics(e) => e.is_numeric(),
            _ => false,
        }
    }
}

impl Numeric for SepError {
    fn is_numeric(&self) -> bool {
        match self {
            SepError::RetryBudgetExhausted { .. } => true,
            SepError::Metrics(e) => e.is_numeric(),
            _ => false,
        }
    }
}
