//! Working-precision configuration and backend selection.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Requested working precision and acceptance tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    /// Decimal digits of working precision (>= 15).
    pub working_digits: u32,
    /// Absolute tolerance the solver's error estimate must meet.
    pub abs_tol: f64,
    /// Relative tolerance for quadrature order-doubling checks.
    pub rel_tol: f64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            working_digits: 16,
            abs_tol: 1e-3,
            rel_tol: 1e-6,
        }
    }
}

impl PrecisionConfig {
    pub fn new(working_digits: u32, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let cfg = PrecisionConfig {
            working_digits,
            abs_tol,
            rel_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_digits(working_digits: u32) -> Result<Self> {
        Self::new(working_digits, 1e-3, 1e-6)
    }

    pub fn validate(&self) -> Result<()> {
        if self.working_digits < 15 {
            return Err(Error::InvalidDomain(format!(
                "working_digits must be >= 15, got {}",
                self.working_digits
            )));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidDomain(
                "abs_tol and rel_tol must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn backend(&self) -> Result<Backend> {
        self.validate()?;
        match self.working_digits {
            15..=16 => Ok(Backend::F64),
            17..=31 => Ok(Backend::DoubleDouble),
            d => Err(Error::PrecisionExhausted(format!(
                "requested {d} digits; available backends: f64 (16), double-double (31)"
            ))),
        }
    }
}

/// Arithmetic backend matching a digits request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    F64,
    DoubleDouble,
}
