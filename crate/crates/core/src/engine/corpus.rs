//! Saved inputs and failures of a campaign.

use crate::coverage::CoverageSet;
use crate::outcome::{FailureKey, RunResult};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SaveReason {
    Initial,
    NewTotalCoverage,
    NewValidCoverage,
}

impl SaveReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SaveReason::Initial => "INITIAL",
            SaveReason::NewTotalCoverage => "NEW_TOTAL_COVERAGE",
            SaveReason::NewValidCoverage => "NEW_VALID_COVERAGE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Initial, Self::NewTotalCoverage, Self::NewValidCoverage]
            .into_iter()
            .find(|r| r.as_str() == s)
    }

    /// Mutants derived from an entry per sweep.
    pub fn num_candidates(self) -> usize {
        match self {
            SaveReason::Initial | SaveReason::NewTotalCoverage => 20,
            SaveReason::NewValidCoverage => 40,
        }
    }
}

impl fmt::Display for SaveReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    /// Execution index of the run that produced this entry.
    pub id: u64,
    pub parent: Option<u64>,
    pub reason: SaveReason,
    pub discovered_secs: f64,
    pub result: RunResult,
    /// Coverage of the run that produced this entry.
    pub coverage: CoverageSet,
    /// What the engine mutates: a parameter sequence, or raw input octets.
    pub data: Vec<u8>,
    /// The input the target saw.
    pub input: Vec<u8>,
}

impl CorpusEntry {
    pub fn num_candidates(&self) -> usize {
        self.reason.num_candidates()
    }

    pub fn file_name(&self) -> String {
        format!("id_{}_{}.bin", self.id, self.reason)
    }
}

/// Parse `id_<n>_<reason>.bin`.
pub fn parse_corpus_file_name(name: &str) -> Option<(u64, SaveReason)> {
    let rest = name.strip_prefix("id_")?.strip_suffix(".bin")?;
    let (id, reason) = rest.split_once('_')?;
    Some((id.parse().ok()?, SaveReason::parse(reason)?))
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CorpusEntry) {
        debug_assert!(self.entries.iter().all(|e| e.id != entry.id), "duplicate corpus id");
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&CorpusEntry> {
        self.entries.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CorpusEntry> {
        self.entries.iter()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.id).collect()
    }

    /// Generated inputs of all entries, in save order.
    pub fn inputs(&self) -> impl Iterator<Item = &[u8]> {
        self.entries.iter().map(|e| e.input.as_slice())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a CorpusEntry;
    type IntoIter = std::slice::Iter<'a, CorpusEntry>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// The first input that triggered a failure key.
#[derive(Clone, Debug, PartialEq)]
pub struct FailureEntry {
    pub key: FailureKey,
    pub exec_index: u64,
    pub parent: Option<u64>,
    pub discovered_secs: f64,
    pub coverage: CoverageSet,
    pub data: Vec<u8>,
    pub input: Vec<u8>,
}

impl FailureEntry {
    pub fn file_name(&self) -> String {
        format!("{}_id_{}.bin", self.key.digest(), self.exec_index)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triaged {
    pub first_secs: f64,
    pub witness: Vec<u8>,
    pub count: usize,
}

/// Group failures by key, keeping the earliest discovery and its input.
/// Ties keep the witness seen first.
pub fn triage<I, W>(failures: I) -> BTreeMap<FailureKey, Triaged>
where
    I: IntoIterator<Item = (FailureKey, f64, W)>,
    W: Into<Vec<u8>>,
{
    let mut out: BTreeMap<FailureKey, Triaged> = BTreeMap::new();
    for (key, secs, witness) in failures {
        match out.get_mut(&key) {
            Some(t) => {
                t.count += 1;
                if secs < t.first_secs {
                    t.first_secs = secs;
                    t.witness = witness.into();
                }
            }
            None => {
                out.insert(
                    key,
                    Triaged {
                        first_secs: secs,
                        witness: witness.into(),
                        count: 1,
                    },
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_counts() {
        assert_eq!(SaveReason::Initial.num_candidates(), 20);
        assert_eq!(SaveReason::NewTotalCoverage.num_candidates(), 20);
        assert_eq!(SaveReason::NewValidCoverage.num_candidates(), 40);
    }

    #[test]
    fn file_names_round_trip() {
        for reason in [SaveReason::Initial, SaveReason::NewTotalCoverage, SaveReason::NewValidCoverage] {
            let e = CorpusEntry {
                id: 417,
                parent: Some(3),
                reason,
                discovered_secs: 0.0,
                result: RunResult::Valid,
                coverage: CoverageSet::new(),
                data: vec![1],
                input: vec![],
            };
            assert_eq!(parse_corpus_file_name(&e.file_name()), Some((417, reason)));
        }
        assert_eq!(parse_corpus_file_name("id_x_INITIAL.bin"), None);
        assert_eq!(parse_corpus_file_name("id_1_BOGUS.bin"), None);
    }

    #[test]
    fn triage_groups_by_full_key() {
        let a = FailureKey::new("Panic", "boom", "t/semantic:1");
        let b = FailureKey::new("Panic", "boom", "t/semantic:2");
        let t = triage([
            (a.clone(), 5.0, b"late".to_vec()),
            (b.clone(), 1.0, b"b".to_vec()),
            (a.clone(), 2.0, b"early".to_vec()),
        ]);
        assert_eq!(t.len(), 2);
        assert_eq!(t[&a].first_secs, 2.0);
        assert_eq!(t[&a].witness, b"early");
        assert_eq!(t[&a].count, 2);
        assert_eq!(t[&b].count, 1);
    }
}
