//! Built-in two-stage programs under test.
//!
//! Each target parses raw text in a syntax stage, then analyzes the parse
//! tree in a semantic stage. Both stages are instrumented with explicit
//! coverage probes. The harness turns a target run into a [`RunOutcome`]:
//!
//! - a documented rejection by either stage is INVALID;
//! - a panic anywhere is FAILURE, keyed by panic kind, message and the last
//!   probe recorded before it;
//! - anything else is VALID.

pub mod script;
pub mod xml;

use crate::coverage::{CoverageLayout, CoverageRecorder};
use crate::outcome::{FailureKey, RunOutcome, RunResult, Stage};
use serde::{Deserialize, Serialize};
use std::any::Any;
use std::cell::Cell;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Once;

pub use script::MiniScript;
pub use xml::MiniXml;

/// A documented rejection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub stage: Stage,
    pub reason: String,
}

impl Rejection {
    pub fn syntax(reason: impl Into<String>) -> Self {
        Self {
            stage: Stage::Syntax,
            reason: reason.into(),
        }
    }

    pub fn semantic(reason: impl Into<String>) -> Self {
        Self {
            stage: Stage::Semantic,
            reason: reason.into(),
        }
    }
}

/// A bug deliberately left in a built-in target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedBug {
    pub id: String,
    pub stage: Stage,
    pub description: String,
    pub key: FailureKey,
    /// An input that triggers this bug and no other.
    pub witness: String,
}

pub trait Target: Send + Sync {
    fn name(&self) -> &'static str;

    fn layout(&self) -> CoverageLayout;

    fn planted_bugs(&self) -> Vec<PlantedBug>;

    /// A small valid input, used as the seed of byte-level campaigns.
    fn sample_input(&self) -> &'static [u8];

    /// Run both stages. May panic; use [`execute`] to get an outcome.
    fn run(&self, input: &[u8], cov: &mut CoverageRecorder) -> Result<(), Rejection>;
}

pub fn target_by_name(name: &str) -> Option<Box<dyn Target>> {
    match name {
        "minixml" => Some(Box::new(MiniXml::new())),
        "miniscript" => Some(Box::new(MiniScript::new())),
        _ => None,
    }
}

pub const TARGET_NAMES: &[&str] = &["minixml", "miniscript"];

thread_local! {
    static QUIET_PANICS: Cell<bool> = const { Cell::new(false) };
}

fn install_panic_hook() {
    static HOOK: Once = Once::new();
    HOOK.call_once(|| {
        let previous = panic::take_hook();
        panic::set_hook(Box::new(move |info| {
            if !QUIET_PANICS.with(Cell::get) {
                previous(info);
            }
        }));
    });
}

/// Execute `input` on `target` under the harness contract.
pub fn execute(target: &dyn Target, input: &[u8], cov: &mut CoverageRecorder) -> RunOutcome {
    install_panic_hook();
    cov.begin();
    QUIET_PANICS.with(|q| q.set(true));
    let result = panic::catch_unwind(AssertUnwindSafe(|| target.run(input, cov)));
    QUIET_PANICS.with(|q| q.set(false));
    let last = cov.last_point();
    let coverage = cov.finish();
    match result {
        Ok(Ok(())) => RunOutcome {
            result: RunResult::Valid,
            coverage,
            failure: None,
            rejected_by: None,
        },
        Ok(Err(rejection)) => RunOutcome {
            result: RunResult::Invalid,
            coverage,
            failure: None,
            rejected_by: Some(rejection.stage),
        },
        Err(payload) => {
            let message = normalize_message(&payload_message(payload.as_ref()));
            let location = match last {
                Some(p) => format!("{}/{}", target.name(), p),
                None => format!("{}/entry", target.name()),
            };
            RunOutcome {
                result: RunResult::Failure,
                coverage,
                failure: Some(FailureKey::new(classify(&message), message, location)),
                rejected_by: None,
            }
        }
    }
}

fn payload_message(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "<non-string panic payload>".to_string()
    }
}

/// Digit runs become `#` so indices and lengths do not split one bug.
pub(crate) fn normalize_message(msg: &str) -> String {
    let mut out = String::with_capacity(msg.len());
    let mut in_digits = false;
    for c in msg.chars() {
        if c.is_ascii_digit() {
            if !in_digits {
                out.push('#');
            }
            in_digits = true;
        } else {
            in_digits = false;
            out.push(c);
        }
    }
    out
}

fn classify(message: &str) -> &'static str {
    if message.starts_with("called `Option::unwrap()` on a `None` value") {
        "NoneUnwrap"
    } else if message.starts_with("called `Result::unwrap()`") {
        "ErrUnwrap"
    } else if message.starts_with("index out of bounds") || message.contains("out of range for slice") {
        "IndexOutOfBounds"
    } else if message.starts_with("attempt to") {
        "ArithmeticError"
    } else if message.starts_with("assertion") {
        "AssertionFailed"
    } else if message.contains("already borrowed") || message.contains("already mutably borrowed") {
        "BorrowError"
    } else {
        "Panic"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::CoveragePoint;

    struct Toy;

    impl Target for Toy {
        fn name(&self) -> &'static str {
            "toy"
        }
        fn layout(&self) -> CoverageLayout {
            CoverageLayout {
                syntax_sites: 1,
                semantic_sites: 2,
            }
        }
        fn planted_bugs(&self) -> Vec<PlantedBug> {
            Vec::new()
        }
        fn sample_input(&self) -> &'static [u8] {
            b"ok"
        }
        fn run(&self, input: &[u8], cov: &mut CoverageRecorder) -> Result<(), Rejection> {
            if cov.syn(0, input.is_empty()) {
                return Err(Rejection::syntax("empty"));
            }
            match input {
                b"bad" => Err(Rejection::semantic("bad")),
                b"boom" => {
                    cov.sem_hit(1);
                    let v: Vec<u8> = Vec::new();
                    let _ = v[input.len()];
                    Ok(())
                }
                b"none" => {
                    cov.sem_hit(0);
                    let x: Option<u8> = None;
                    x.unwrap();
                    Ok(())
                }
                _ => Ok(()),
            }
        }
    }

    #[test]
    fn harness_contract() {
        let mut cov = CoverageRecorder::new();
        let ok = execute(&Toy, b"ok", &mut cov);
        assert_eq!(ok.result, RunResult::Valid);
        let syn = execute(&Toy, b"", &mut cov);
        assert_eq!(syn.result, RunResult::Invalid);
        assert_eq!(syn.rejected_by, Some(Stage::Syntax));
        let sem = execute(&Toy, b"bad", &mut cov);
        assert_eq!(sem.rejected_by, Some(Stage::Semantic));
        assert!(sem.failure.is_none());

        let boom = execute(&Toy, b"boom", &mut cov);
        assert_eq!(boom.result, RunResult::Failure);
        let key = boom.failure.unwrap();
        assert_eq!(key.error_type, "IndexOutOfBounds");
        assert_eq!(key.message, "index out of bounds: the len is # but the index is #");
        assert_eq!(key.location, "toy/semantic:1");
        assert!(boom.coverage.contains(CoveragePoint::new(crate::coverage::Region::Semantic, 1, true)));

        let none = execute(&Toy, b"none", &mut cov);
        let key = none.failure.unwrap();
        assert_eq!(key.error_type, "NoneUnwrap");
        assert_eq!(key.location, "toy/semantic:0");

        // recorder is reusable after a panic
        assert_eq!(execute(&Toy, b"ok", &mut cov), ok);
    }

    #[test]
    fn message_normalization() {
        assert_eq!(normalize_message("len 12 idx 345"), "len # idx #");
        assert_eq!(normalize_message("plain"), "plain");
    }

    #[test]
    fn registry_lookup() {
        for name in TARGET_NAMES {
            assert_eq!(target_by_name(name).unwrap().name(), *name);
        }
        assert!(target_by_name("rhino").is_none());
    }
}
