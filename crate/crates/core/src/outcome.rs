//! Result of executing one input against a target.

use crate::coverage::CoverageSet;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunResult {
    Valid,
    Invalid,
    Failure,
}

impl fmt::Display for RunResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunResult::Valid => "VALID",
            RunResult::Invalid => "INVALID",
            RunResult::Failure => "FAILURE",
        })
    }
}

/// Pipeline stage that rejected an input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Syntax,
    Semantic,
}

/// Bug identity: two failures are the same bug iff their keys are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureKey {
    pub error_type: String,
    pub message: String,
    pub location: String,
}

impl FailureKey {
    pub fn new(
        error_type: impl Into<String>,
        message: impl Into<String>,
        location: impl Into<String>,
    ) -> Self {
        Self {
            error_type: error_type.into(),
            message: message.into(),
            location: location.into(),
        }
    }

    /// Short stable hex digest, used in failure file names.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for part in [&self.error_type, &self.message, &self.location] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        h.finalize()[..6].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for FailureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} @ {}", self.error_type, self.message, self.location)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub result: RunResult,
    pub coverage: CoverageSet,
    /// Present iff `result` is FAILURE.
    pub failure: Option<FailureKey>,
    /// Present iff `result` is INVALID.
    pub rejected_by: Option<Stage>,
}

impl RunOutcome {
    /// Equality on the recorded fields: result, coverage and failure key.
    pub fn same_as(&self, other: &RunOutcome) -> bool {
        self.result == other.result
            && self.coverage == other.coverage
            && self.failure == other.failure
    }
}
