//! `miniscript`: a compiler front end for a small JavaScript-like language.
//!
//! Stage 1 tokenizes and parses a program. Stage 2 resolves scopes, removes
//! unreachable code, folds constants (including inlining of immediately
//! invoked arrow functions), emits bytecode and runs it on a strictly typed
//! stack machine under a step budget.
//!
//! Planted bugs:
//!
//! | id | stage | trigger |
//! |----|-------|---------|
//! | `script-arrow-free-name` | semantic | immediately invoked arrow with constant arguments whose body names an undeclared variable |
//! | `script-dead-var-in-loop` | semantic | `var` declared only in unreachable code inside a loop, then used |
//! | `script-call-on-undefined-index` | semantic | calling `undefined[k]` with constant `k` |

mod analysis;
mod compile;
mod parser;
mod vm;

pub use parser::{parse, BinOp, Expr, Stmt, UnOp};

use super::{PlantedBug, Rejection, Target};
use crate::coverage::{CoverageLayout, CoverageRecorder};
use crate::outcome::{FailureKey, Stage};

const SAMPLE: &[u8] = br#"var l_0 = 1;
var l_1 = "abc";
var f = function(x, y) { var t = (x + y); while ((t < 10)) { t = (t * 2); if ((t == 8)) { break; } } return t; };
var g = (x => (x.length + l_0));
if ((l_1.length > 2)) { l_0 = f(l_0, 2); } else { l_0 = g(l_1); }
"#;

#[derive(Clone, Copy, Debug, Default)]
pub struct MiniScript {
    /// Treat analysis warnings (unreachable code) as rejections.
    pub strict_warnings: bool,
}

impl MiniScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn strict() -> Self {
        Self { strict_warnings: true }
    }
}

impl Target for MiniScript {
    fn name(&self) -> &'static str {
        "miniscript"
    }

    fn layout(&self) -> CoverageLayout {
        CoverageLayout {
            syntax_sites: parser::SYNTAX_SITES,
            semantic_sites: vm::SITES,
        }
    }

    fn planted_bugs(&self) -> Vec<PlantedBug> {
        let bug = |id: &str, description: &str, key, witness: &str| PlantedBug {
            id: id.into(),
            stage: Stage::Semantic,
            description: description.into(),
            key,
            witness: witness.into(),
        };
        vec![
            bug(
                "script-arrow-free-name",
                "arrow inlining looks up a free name that scope analysis let through",
                FailureKey::new(
                    "NoneUnwrap",
                    "called `Option::unwrap()` on a `None` value",
                    "miniscript/semantic:31",
                ),
                "((x => (x + y)))(1);",
            ),
            bug(
                "script-dead-var-in-loop",
                "dead-code elimination inside loops drops hoisted declarations",
                FailureKey::new("Panic", "no entry found for key", "miniscript/semantic:48"),
                "while (true) { break; var x; } x;",
            ),
            bug(
                "script-call-on-undefined-index",
                "constant folding of a call through an index assumes a receiver object",
                FailureKey::new("Panic", "constant receiver for call target", "miniscript/semantic:36"),
                "(undefined[0])();",
            ),
        ]
    }

    fn sample_input(&self) -> &'static [u8] {
        SAMPLE
    }

    fn run(&self, input: &[u8], cov: &mut CoverageRecorder) -> Result<(), Rejection> {
        let program = parser::parse(input, cov)?;
        let (program, _warnings) = analysis::analyze(program, cov, self.strict_warnings)?;
        let compiled = compile::compile(&program, cov);
        vm::run(&compiled, cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::RunResult;
    use crate::targets::execute;

    fn run(target: &MiniScript, src: &str) -> crate::outcome::RunOutcome {
        let mut cov = CoverageRecorder::new();
        execute(target, src.as_bytes(), &mut cov)
    }

    #[test]
    fn sample_is_valid() {
        let t = MiniScript::new();
        let out = run(&t, std::str::from_utf8(t.sample_input()).unwrap());
        assert_eq!(out.result, RunResult::Valid, "{out:?}");
    }

    #[test]
    fn witnesses_trigger_their_keys() {
        let t = MiniScript::new();
        for bug in t.planted_bugs() {
            let out = run(&t, &bug.witness);
            assert_eq!(out.result, RunResult::Failure, "{}", bug.id);
            assert_eq!(out.failure.as_ref(), Some(&bug.key), "{}", bug.id);
        }
    }

    #[test]
    fn semantic_rejections() {
        let t = MiniScript::new();
        for src in [
            "x;",
            "break;",
            "return 1;",
            "var f = function(a, a) { };",
            "(1)();",
            "null.x;",
            "(undefined[1]);",
            "(null[0])();",
            "(1 = 2);",
        ] {
            let out = run(&t, src);
            assert_eq!(out.result, RunResult::Invalid, "{src}: {out:?}");
            assert_eq!(out.rejected_by, Some(Stage::Semantic), "{src}");
        }
    }

    #[test]
    fn hoisting_and_dead_code_outside_loops_are_handled() {
        let t = MiniScript::new();
        for src in [
            "x; var x;",
            "var f = function() { return 1; var y; }; f();",
            "var f = function() { return y; return 2; var y; };",
            "while (true) { break; } var z; z;",
            "((x => (x + 1)))(2);",
            "var y = 3; ((x => (x + y)))(1);",
            "var g = (x => (x + w));",
            "(\"ab\"[0])();",
            "",
        ] {
            let out = run(&t, src);
            assert_ne!(out.result, RunResult::Failure, "{src}: {out:?}");
        }
        assert_eq!(run(&t, "var y = 3; ((x => (x + y)))(1);").result, RunResult::Valid);
    }

    #[test]
    fn strict_mode_rejects_unreachable_code() {
        let src = "var f = function() { return 1; 2; };";
        assert_eq!(run(&MiniScript::new(), src).result, RunResult::Valid);
        assert_eq!(run(&MiniScript::strict(), src).result, RunResult::Invalid);
    }
}
