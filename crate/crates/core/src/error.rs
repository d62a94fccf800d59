use std::fmt;

/// Diagnostic attached to a least-squares solve that was rejected as
/// ill-conditioned.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningReport {
    pub condition: f64,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
    pub grid: Vec<f64>,
}

impl fmt::Display for ConditioningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "condition number {:.3e} exceeds {:.3e} ({} grid points on [{:.4}, {:.4}])",
            self.condition,
            self.threshold,
            self.grid.len(),
            self.grid.first().copied().unwrap_or(0.0),
            self.grid.last().copied().unwrap_or(0.0),
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("ill-conditioned solve: {0}")]
    Conditioning(Box<ConditioningReport>),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn is_conditioning(&self) -> bool {
        matches!(self, Error::Conditioning(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
