//! Structured pass/fail reports shared by the validators.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One failed identity or structural condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Violation {
    /// Short machine-friendly name of the check, e.g. `"unitary"`.
    pub check: String,
    /// Where it failed: a block, orbit, matrix unit or stage.
    pub location: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: impl Into<String>, location: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation { check: check.into(), location: location.into(), detail: detail.into() });
    }

    pub fn extend(&mut self, other: Report) {
        self.violations.extend(other.violations);
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "FAIL {} at {}: {}", v.check, v.location, v.detail)?;
        }
        Ok(())
    }
}
