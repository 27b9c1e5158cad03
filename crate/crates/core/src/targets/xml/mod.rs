//! `minixml`: a build-file reader in the style of Ant/Maven.
//!
//! Stage 1 checks well-formedness and builds an element tree. Stage 2 reads
//! a `<project>` model from the tree, resolves references between targets,
//! paths and tasks, and runs the build.
//!
//! Planted bugs:
//!
//! | id | stage | trigger |
//! |----|-------|---------|
//! | `xml-augment-missing-id` | semantic | `<augment>` without `id` in a project that defines a path |
//! | `xml-duplicate-description` | semantic | two `<description>` children of `<project>` |
//! | `xml-javac-debug-no-destdir` | semantic | executed `<javac>` with `debug` but without `destdir` |
//! | `xml-surrogate-reference` | syntax | numeric character reference to a surrogate or beyond U+10FFFF |

mod model;
mod parser;

pub use parser::{parse, Element, Node};

use super::{PlantedBug, Rejection, Target};
use crate::coverage::{CoverageLayout, CoverageRecorder};
use crate::outcome::{FailureKey, Stage};

const SAMPLE: &[u8] = br#"<project name="demo" default="main">
  <description>demo build</description>
  <property name="src" value="src" />
  <path id="cp"><pathelement location="lib" /></path>
  <target name="compile"><mkdir dir="out" /><javac srcdir="src" destdir="out" classpathref="cp" /></target>
  <target name="main" depends="compile"><echo message="done" /></target>
</project>
"#;

#[derive(Clone, Copy, Debug, Default)]
pub struct MiniXml;

impl MiniXml {
    pub fn new() -> Self {
        MiniXml
    }
}

const INDEX_OOB: &str = "index out of bounds: the len is # but the index is #";
const NONE_UNWRAP: &str = "called `Option::unwrap()` on a `None` value";

impl Target for MiniXml {
    fn name(&self) -> &'static str {
        "minixml"
    }

    fn layout(&self) -> CoverageLayout {
        CoverageLayout {
            syntax_sites: parser::SYNTAX_SITES,
            semantic_sites: model::SEMANTIC_SITES,
        }
    }

    fn planted_bugs(&self) -> Vec<PlantedBug> {
        let bug = |id: &str, stage, description: &str, key, witness: &str| PlantedBug {
            id: id.into(),
            stage,
            description: description.into(),
            key,
            witness: witness.into(),
        };
        vec![
            bug(
                "xml-augment-missing-id",
                Stage::Semantic,
                "augment without an id dereferences a missing attribute",
                FailureKey::new("NoneUnwrap", NONE_UNWRAP, "minixml/semantic:70"),
                r#"<project><path id="cp" /><augment /></project>"#,
            ),
            bug(
                "xml-duplicate-description",
                Stage::Semantic,
                "a second description overruns the single description slot",
                FailureKey::new("IndexOutOfBounds", INDEX_OOB, "minixml/semantic:57"),
                "<project><description>a</description><description>b</description></project>",
            ),
            bug(
                "xml-javac-debug-no-destdir",
                Stage::Semantic,
                "a javac with a debug setting but no output directory dereferences the missing destdir",
                FailureKey::new("NoneUnwrap", NONE_UNWRAP, "minixml/semantic:35"),
                r#"<project><target name="main"><javac debug="true" /></target></project>"#,
            ),
            bug(
                "xml-surrogate-reference",
                Stage::Syntax,
                "numeric character reference outside the scalar-value range",
                FailureKey::new("NoneUnwrap", NONE_UNWRAP, "minixml/syntax:13"),
                "<a>&#xD800;</a>",
            ),
        ]
    }

    fn sample_input(&self) -> &'static [u8] {
        SAMPLE
    }

    fn run(&self, input: &[u8], cov: &mut CoverageRecorder) -> Result<(), Rejection> {
        let root = parser::parse(input, cov)?;
        model::analyze(&root, cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::Region;
    use crate::outcome::{RunOutcome, RunResult};
    use crate::targets::execute;

    fn run(src: &str) -> RunOutcome {
        let mut cov = CoverageRecorder::new();
        execute(&MiniXml, src.as_bytes(), &mut cov)
    }

    #[test]
    fn sample_is_valid() {
        let out = run(std::str::from_utf8(SAMPLE).unwrap());
        assert_eq!(out.result, RunResult::Valid, "{out:?}");
        assert!(out.coverage.count_region(Region::Semantic) > 20);
    }

    #[test]
    fn witnesses_trigger_their_keys() {
        let bugs = MiniXml.planted_bugs();
        for bug in &bugs {
            let out = run(&bug.witness);
            assert_eq!(out.result, RunResult::Failure, "{}", bug.id);
            assert_eq!(out.failure.as_ref(), Some(&bug.key), "{}", bug.id);
        }
        let keys: std::collections::BTreeSet<_> = bugs.iter().map(|b| &b.key).collect();
        assert_eq!(keys.len(), bugs.len());
    }

    #[test]
    fn unmatched_tags_are_syntax_errors() {
        let out = run("<a b>ac&#84;a>");
        assert_eq!(out.result, RunResult::Invalid);
        assert_eq!(out.rejected_by, Some(Stage::Syntax));
        assert_eq!(out.coverage.count_region(Region::Semantic), 0);
    }

    #[test]
    fn wrong_root_is_a_semantic_rejection() {
        let out = run("<foo><bar>Hello</bar><baz /></foo>");
        assert_eq!(out.result, RunResult::Invalid);
        assert_eq!(out.rejected_by, Some(Stage::Semantic));
    }

    #[test]
    fn near_misses_of_the_planted_bugs_are_not_failures() {
        for src in [
            r#"<project><path id="cp" /><augment id="cp" /></project>"#,
            r#"<project><augment /></project>"#,
            "<project><description>a</description></project>",
            r#"<project><target name="main"><mkdir dir="out" /><javac debug="true" destdir="out" /></target></project>"#,
            r#"<project><target name="main"><javac /></target></project>"#,
            "<a>&#x41;</a>",
        ] {
            assert_ne!(run(src).result, RunResult::Failure, "{src}");
        }
    }

    #[test]
    fn declared_semantic_total_is_large_enough() {
        assert!(MiniXml.layout().total(Region::Semantic) >= 60);
    }
}
