use serde::Serialize;

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `max_residual < tolerance`; NaN never passes.
    pub fn new(suite: &str, check: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.into(),
            max_residual,
            tolerance,
            pass: max_residual < tolerance,
        }
    }

    /// For lower bounds (orders, overlaps): passes when `value > threshold`.
    pub fn at_least(suite: &str, check: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.into(),
            max_residual: value,
            tolerance: threshold,
            pass: value > threshold,
        }
    }

    /// Boolean outcome; residual 0 or 1.
    pub fn flag(suite: &str, check: impl Into<String>, ok: bool) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.into(),
            max_residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass: ok,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
