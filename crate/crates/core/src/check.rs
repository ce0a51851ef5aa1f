//! Named inequality evaluations collected into reports.

use serde::{Deserialize, Serialize};

/// Relative slack granted to strict inequalities so that round-off at
/// the boundary does not flip a verdict. Relative because several bounds
/// are themselves of order `1e-14`.
pub const STRICT_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    /// `lhs < rhs`.
    pub fn lt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let pass = lhs < rhs + STRICT_SLACK * rhs.abs();
        Self { name: name.into(), lhs, rhs, pass }
    }

    /// `lhs <= rhs`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let pass = lhs <= rhs;
        Self { name: name.into(), lhs, rhs, pass }
    }

    /// Margin `rhs - lhs`.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// First failing check, if any.
pub fn first_failure(checks: &[InequalityCheck]) -> Option<&InequalityCheck> {
    checks.iter().find(|c| !c.pass)
}

pub fn all_pass(checks: &[InequalityCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}
