//! Working precision for phases `e(θ·k)`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Environment variable consulted by [`Precision::from_env`].
pub const PRECISION_ENV: &str = "NCT_PRECISION";

/// How `θ·k mod 1` is reduced before exponentiation.
///
/// `Double` multiplies the double-precision value of θ by `k` and takes the
/// fractional part, losing about `log10(|k|)` digits. `Extended` reduces the
/// exact quadratic value modulo 1 in integer arithmetic first, so the phase
/// keeps full double accuracy for every `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl Precision {
    /// Reads `NCT_PRECISION`, falling back to the default when unset.
    pub fn from_env() -> Result<Self, Error> {
        match std::env::var(PRECISION_ENV) {
            Ok(v) if !v.trim().is_empty() => v.parse(),
            _ => Ok(Precision::default()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(Error::Parse(format!(
                "unknown precision '{other}' (expected 'double' or 'extended')"
            ))),
        }
    }
}
