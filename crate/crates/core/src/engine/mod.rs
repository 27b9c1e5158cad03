//! Search engines: Zest (generator-based, validity-guided), byte-level
//! coverage-guided fuzzing, and QuickCheck-style random sampling.
//!
//! All three share one execution core that runs the target, maintains the
//! cumulative total and valid coverage sets, tracks failures, and reports
//! every execution to an [`Observer`].

mod cgf;
mod corpus;
mod log;
mod mutate;
mod quickcheck;
mod zest;

pub use cgf::{cgf_campaign, generated_seed, SEED_SEARCH_LIMIT};
pub use corpus::{parse_corpus_file_name, triage, Corpus, CorpusEntry, FailureEntry, SaveReason, Triaged};
pub use log::{CampaignStats, ExecEvent, Observer, Recording};
pub use mutate::{Mutation, MutationParams, Mutator, PositiveGeometric, Window};
pub use quickcheck::quickcheck_campaign;
pub use zest::zest_campaign;

use crate::coverage::{semantic_branch_count, CoverageLayout, CoverageRecorder, CoverageSet, Region};
use crate::gen::{GeneratedInput, Generator};
use crate::outcome::{FailureKey, RunOutcome, RunResult};
use crate::param::{ExtensionStream, GenError, ParameterSequence, ParametricSource, DEFAULT_MAX_SEQUENCE_LEN};
use crate::targets::{execute, Target};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Zest,
    Cgf,
    #[serde(rename = "quickcheck")]
    QuickCheck,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Zest, EngineKind::Cgf, EngineKind::QuickCheck];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Zest => "zest",
            EngineKind::Cgf => "cgf",
            EngineKind::QuickCheck => "quickcheck",
        }
    }

    pub fn uses_generator(self) -> bool {
        self != EngineKind::Cgf
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown engine `{s}` (expected zest, cgf or quickcheck)"))
    }
}

/// When a campaign stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Budget {
    Executions(u64),
    Duration(Duration),
}

impl FromStr for Budget {
    type Err = String;

    /// `10000execs`, `500ms`, `60s`, `5m`, `1h`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let (digits, unit) = s.split_at(split);
        let n: u64 = digits
            .parse()
            .map_err(|_| format!("invalid budget `{s}`: expected e.g. 60s or 10000execs"))?;
        let budget = match unit {
            "execs" | "x" => Budget::Executions(n),
            "ms" => Budget::Duration(Duration::from_millis(n)),
            "s" | "" => Budget::Duration(Duration::from_secs(n)),
            "m" => Budget::Duration(Duration::from_secs(n * 60)),
            "h" => Budget::Duration(Duration::from_secs(n * 3600)),
            _ => return Err(format!("invalid budget unit `{unit}` in `{s}`")),
        };
        if n == 0 {
            return Err("budget must be positive".into());
        }
        Ok(budget)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Executions(n) => write!(f, "{n}execs"),
            Budget::Duration(d) if d.subsec_millis() != 0 => write!(f, "{}ms", d.as_millis()),
            Budget::Duration(d) => write!(f, "{}s", d.as_secs()),
        }
    }
}

/// Source of campaign time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ClockMode {
    Wall,
    /// Every execution advances time by a fixed amount. Makes the stats
    /// stream reproducible.
    Virtual { micros_per_exec: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignSettings {
    pub budget: Budget,
    /// Seeds the extension stream; the mutation stream uses `mutation.rng_seed`.
    pub seed: u64,
    pub mutation: MutationParams,
    pub max_sequence_len: usize,
    pub clock: ClockMode,
    pub stats_interval: Duration,
    /// Assert the coverage-set invariants after every execution.
    pub check_invariants: bool,
}

impl CampaignSettings {
    pub fn new(budget: Budget, seed: u64) -> Self {
        Self {
            budget,
            seed,
            mutation: MutationParams {
                rng_seed: derive_seed(seed, 0x6d75_7461_7465),
                ..MutationParams::default()
            },
            max_sequence_len: DEFAULT_MAX_SEQUENCE_LEN,
            clock: ClockMode::Wall,
            stats_interval: Duration::from_secs(1),
            check_invariants: true,
        }
    }

    pub fn with_virtual_clock(mut self, micros_per_exec: u64) -> Self {
        self.clock = ClockMode::Virtual { micros_per_exec };
        self
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        self.mutation.validate().map_err(CampaignError::Config)?;
        if self.max_sequence_len == 0 {
            return Err(CampaignError::Config("sequence length cap must be positive".into()));
        }
        if self.stats_interval.is_zero() {
            return Err(CampaignError::Config("stats interval must be positive".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over `(base, salt)`.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("generator error: {0}")]
    Generator(#[from] GenError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub engine: EngineKind,
    pub stats: CampaignStats,
    pub corpus: Corpus,
    /// First input per failure key, in discovery order.
    pub failures: Vec<FailureEntry>,
    pub total_coverage: CoverageSet,
    pub valid_coverage: CoverageSet,
}

impl CampaignResult {
    pub fn failure_keys(&self) -> BTreeSet<&FailureKey> {
        self.failures.iter().map(|f| &f.key).collect()
    }

    pub fn semantic_coverage(&self) -> usize {
        self.total_coverage.count_region(Region::Semantic)
    }
}

/// What one execution changed.
pub(crate) struct Executed {
    pub exec_index: u64,
    pub outcome: RunOutcome,
    pub new_total: Vec<u32>,
    pub new_valid: Vec<u32>,
}

struct Clock {
    mode: ClockMode,
    start: Instant,
    execs: u64,
}

impl Clock {
    fn elapsed(&self) -> Duration {
        match self.mode {
            ClockMode::Wall => self.start.elapsed(),
            ClockMode::Virtual { micros_per_exec } => Duration::from_micros(self.execs * micros_per_exec),
        }
    }
}

/// Consecutive discarded candidates tolerated before giving up.
const MAX_CONSECUTIVE_DISCARDS: u32 = 10_000;

/// Execution core shared by the engines.
pub(crate) struct Core<'a> {
    engine: EngineKind,
    target: &'a dyn Target,
    layout: CoverageLayout,
    recorder: CoverageRecorder,
    total: CoverageSet,
    valid: CoverageSet,
    stats: CampaignStats,
    corpus: Corpus,
    failures: Vec<FailureEntry>,
    seen_keys: BTreeSet<FailureKey>,
    observer: &'a mut dyn Observer,
    clock: Clock,
    budget: Budget,
    stats_interval: Duration,
    next_stats: Duration,
    /// Clock reading taken right after the latest execution.
    now: Duration,
    check_invariants: bool,
    discards: u32,
}

impl<'a> Core<'a> {
    pub fn new(
        engine: EngineKind,
        target: &'a dyn Target,
        settings: &CampaignSettings,
        observer: &'a mut dyn Observer,
    ) -> Self {
        Self {
            engine,
            target,
            layout: target.layout(),
            recorder: CoverageRecorder::new(),
            total: CoverageSet::new(),
            valid: CoverageSet::new(),
            stats: CampaignStats::default(),
            corpus: Corpus::new(),
            failures: Vec::new(),
            seen_keys: BTreeSet::new(),
            observer,
            clock: Clock {
                mode: settings.clock,
                start: Instant::now(),
                execs: 0,
            },
            budget: settings.budget,
            stats_interval: settings.stats_interval,
            next_stats: settings.stats_interval,
            now: Duration::ZERO,
            check_invariants: settings.check_invariants,
            discards: 0,
        }
    }

    pub fn exhausted(&self) -> bool {
        match self.budget {
            Budget::Executions(n) => self.stats.execs >= n,
            Budget::Duration(d) => self.clock.elapsed() >= d,
        }
    }

    /// Index the next execution will get.
    pub fn next_index(&self) -> u64 {
        self.stats.execs
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    fn secs(&self) -> f64 {
        self.now.as_secs_f64()
    }

    /// Record a candidate that could not be generated.
    pub fn discard(&mut self) -> Result<(), CampaignError> {
        self.discards += 1;
        if self.discards >= MAX_CONSECUTIVE_DISCARDS {
            return Err(CampaignError::Config(format!(
                "{MAX_CONSECUTIVE_DISCARDS} consecutive candidates exceeded the sequence length cap"
            )));
        }
        Ok(())
    }

    pub fn execute(&mut self, parent: Option<u64>, data: &[u8], input: &[u8]) -> Result<Executed, CampaignError> {
        self.discards = 0;
        let exec_index = self.stats.execs;
        let outcome = execute(self.target, input, &mut self.recorder);
        self.clock.execs += 1;
        self.stats.execs += 1;
        self.now = self.clock.elapsed();

        let mut new_total = Vec::new();
        let mut new_valid = Vec::new();
        let mut new_failure = None;
        match outcome.result {
            RunResult::Failure => {
                self.stats.failures += 1;
                let key = outcome.failure.clone().expect("failure outcome carries a key");
                if self.seen_keys.insert(key.clone()) {
                    new_failure = Some(FailureEntry {
                        key,
                        exec_index,
                        parent,
                        discovered_secs: self.secs(),
                        coverage: outcome.coverage.clone(),
                        data: data.to_vec(),
                        input: input.to_vec(),
                    });
                }
            }
            result => {
                new_total = self.total.union_with(&outcome.coverage);
                if result == RunResult::Valid {
                    self.stats.valid += 1;
                    new_valid = self.valid.union_with(&outcome.coverage);
                } else {
                    self.stats.invalid += 1;
                }
            }
        }
        if self.check_invariants {
            assert!(self.valid.is_subset(&self.total), "valid coverage escaped total coverage");
        }
        self.refresh_coverage_stats();

        self.observer.on_event(&ExecEvent {
            exec_index,
            parent_id: parent,
            result: outcome.result,
            new_total: new_total.clone(),
            new_valid: new_valid.clone(),
            failure_key: outcome.failure.clone(),
        })?;
        if let Some(failure) = new_failure {
            self.observer.on_failure(&failure)?;
            self.failures.push(failure);
            self.stats.unique_failures = self.failures.len();
            self.emit_stats()?;
        } else {
            self.tick()?;
        }
        Ok(Executed {
            exec_index,
            outcome,
            new_total,
            new_valid,
        })
    }

    pub fn save(
        &mut self,
        executed: &Executed,
        reason: SaveReason,
        parent: Option<u64>,
        data: Vec<u8>,
        input: Vec<u8>,
    ) -> Result<(), CampaignError> {
        debug_assert_ne!(executed.outcome.result, RunResult::Failure);
        let entry = CorpusEntry {
            id: executed.exec_index,
            parent,
            reason,
            discovered_secs: self.secs(),
            result: executed.outcome.result,
            coverage: executed.outcome.coverage.clone(),
            data,
            input,
        };
        self.observer.on_save(&entry)?;
        self.corpus.push(entry);
        self.stats.corpus = self.corpus.len();
        self.emit_stats()
    }

    fn refresh_coverage_stats(&mut self) {
        let (sem, ratio) = semantic_branch_count(&self.total, &self.layout);
        self.stats.total_cov = self.total.len();
        self.stats.valid_cov = self.valid.len();
        self.stats.sem_cov = sem;
        self.stats.sem_ratio = ratio;
    }

    fn emit_stats(&mut self) -> Result<(), CampaignError> {
        self.stats.t = self.secs();
        self.observer.on_stats(&self.stats)?;
        Ok(())
    }

    fn tick(&mut self) -> Result<(), CampaignError> {
        if self.now >= self.next_stats {
            while self.next_stats <= self.now {
                self.next_stats += self.stats_interval;
            }
            self.emit_stats()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<CampaignResult, CampaignError> {
        self.now = self.clock.elapsed();
        self.emit_stats()?;
        Ok(CampaignResult {
            engine: self.engine,
            stats: self.stats,
            corpus: self.corpus,
            failures: self.failures,
            total_coverage: self.total,
            valid_coverage: self.valid,
        })
    }
}

/// Generate from `seq`, extending it from `stream` as needed.
/// Octets the generator did not read are dropped from `seq`.
/// `Ok(None)` means the candidate hit the length cap and is discarded.
pub(crate) fn generate_extending(
    generator: &dyn Generator,
    seq: &mut ParameterSequence,
    stream: &mut ExtensionStream,
    max_len: usize,
) -> Result<Option<GeneratedInput>, CampaignError> {
    let mut source = ParametricSource::new(seq, Some(stream), max_len);
    let generated = generator.generate(&mut source);
    let consumed = source.consumed();
    match generated {
        Ok(input) => {
            seq.truncate(consumed);
            Ok(Some(input))
        }
        Err(GenError::LengthCap { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("generator error: {0}")]
    Generator(GenError),
}

/// Regenerate the input a stored parameter sequence encodes.
pub fn regenerate(generator: &dyn Generator, data: &[u8]) -> Result<GeneratedInput, ReplayError> {
    let mut seq = ParameterSequence::new(0, data.to_vec());
    let mut source = ParametricSource::replaying(&mut seq);
    generator.generate(&mut source).map_err(|e| match e {
        GenError::Exhausted { consumed } => ReplayError::ConfigMismatch(format!(
            "sequence of {} octets ran out after {consumed}; it was produced by a different generator configuration",
            data.len()
        )),
        other => ReplayError::Generator(other),
    })
}

/// Re-execute a stored entry. Without a generator, `data` is the raw input.
pub fn replay(
    target: &dyn Target,
    generator: Option<&dyn Generator>,
    data: &[u8],
) -> Result<(Vec<u8>, RunOutcome), ReplayError> {
    let input = match generator {
        Some(g) => regenerate(g, data)?.text,
        None => data.to_vec(),
    };
    let mut recorder = CoverageRecorder::new();
    let outcome = execute(target, &input, &mut recorder);
    Ok((input, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_parsing() {
        assert_eq!("60s".parse(), Ok(Budget::Duration(Duration::from_secs(60))));
        assert_eq!("2m".parse(), Ok(Budget::Duration(Duration::from_secs(120))));
        assert_eq!("250ms".parse(), Ok(Budget::Duration(Duration::from_millis(250))));
        assert_eq!("10000execs".parse(), Ok(Budget::Executions(10_000)));
        assert!("fast".parse::<Budget>().is_err());
        assert!("0s".parse::<Budget>().is_err());
        assert!("10parsecs".parse::<Budget>().is_err());
        for s in ["60s", "250ms", "10000execs"] {
            assert_eq!(s.parse::<Budget>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn engine_names() {
        for e in EngineKind::ALL {
            assert_eq!(e.as_str().parse::<EngineKind>(), Ok(e));
        }
        assert!("afl".parse::<EngineKind>().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: BTreeSet<u64> = (0..100).map(|r| derive_seed(42, r)).collect();
        assert_eq!(seeds.len(), 100);
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
    }
}
