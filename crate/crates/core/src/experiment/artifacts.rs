//! The files a campaign leaves in its output directory.
//!
//! ```text
//! manifest.json               what ran, with which configuration
//! events.jsonl                one record per execution
//! stats.jsonl                 counter snapshots
//! corpus/id_<n>_<REASON>.bin  saved sequences (raw inputs for cgf)
//! corpus/index.jsonl          result and coverage of each saved entry
//! corpus/inputs/id_<n>        generated input of each saved entry
//! failures/<digest>_id_<n>.bin
//! failures/index.jsonl
//! failures/inputs/<digest>_id_<n>
//! seeds/                      copies of the cgf seed inputs
//! planted_bugs.json           the target's planted-bug registry
//! triage.json                 failure keys with first discovery
//! summary.json                final counters and exit status
//! ```

use super::config::LogMode;
use super::ExperimentError;
use crate::engine::{
    Budget, CampaignStats, CorpusEntry, EngineKind, ExecEvent, FailureEntry, MutationParams, Observer, SaveReason,
};
use crate::gen::GeneratorConfig;
use crate::outcome::{FailureKey, RunResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const EVENTS: &str = "events.jsonl";
pub const STATS: &str = "stats.jsonl";
pub const CORPUS_DIR: &str = "corpus";
pub const FAILURES_DIR: &str = "failures";
pub const SEEDS_DIR: &str = "seeds";
pub const INDEX: &str = "index.jsonl";
pub const PLANTED_BUGS: &str = "planted_bugs.json";
pub const TRIAGE: &str = "triage.json";
pub const SUMMARY: &str = "summary.json";

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub format: u32,
    pub engine: EngineKind,
    pub target: String,
    pub strict_warnings: bool,
    pub generator: Option<String>,
    pub generator_config: Option<GeneratorConfig>,
    pub generator_fingerprint: Option<String>,
    pub seed: u64,
    pub budget: Budget,
    pub mutation: MutationParams,
    pub max_sequence_len: usize,
    pub virtual_clock_us: Option<u64>,
    pub log: LogMode,
    /// Seed files, relative to the run directory.
    pub seed_inputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusRecord {
    pub id: u64,
    pub parent: Option<u64>,
    pub reason: SaveReason,
    pub discovered_secs: f64,
    pub result: RunResult,
    pub coverage: Vec<u32>,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureRecord {
    pub key: FailureKey,
    pub exec_index: u64,
    pub parent: Option<u64>,
    pub discovered_secs: f64,
    pub coverage: Vec<u32>,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TriageRecord {
    pub key: FailureKey,
    pub digest: String,
    /// Id of the matching planted bug, if any.
    pub planted: Option<String>,
    pub first_secs: f64,
    pub count: usize,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub stats: CampaignStats,
    pub planted_found: Vec<String>,
    pub other_failures: usize,
    pub exit_code: i32,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Corrupt(format!("{}: {e}", path.display())))
}

/// Parse a JSON-lines file. A blank file yields no records.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let file = File::open(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ExperimentError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| ExperimentError::Corrupt(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

fn jsonl_line<T: Serialize>(w: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

/// Streams campaign artifacts into a run directory.
pub struct DiskObserver {
    dir: PathBuf,
    log: LogMode,
    events: BufWriter<File>,
    stats: BufWriter<File>,
    corpus_index: BufWriter<File>,
    failure_index: BufWriter<File>,
}

impl DiskObserver {
    /// Create the directory layout. Existing artifacts are overwritten.
    pub fn create(dir: &Path, log: LogMode) -> io::Result<Self> {
        for sub in [CORPUS_DIR, FAILURES_DIR] {
            let sub = dir.join(sub);
            if sub.exists() {
                fs::remove_dir_all(&sub)?;
            }
            fs::create_dir_all(sub.join("inputs"))?;
        }
        let open = |name: &Path| File::create(dir.join(name)).map(BufWriter::new);
        Ok(Self {
            dir: dir.to_path_buf(),
            log,
            events: open(Path::new(EVENTS))?,
            stats: open(Path::new(STATS))?,
            corpus_index: open(&Path::new(CORPUS_DIR).join(INDEX))?,
            failure_index: open(&Path::new(FAILURES_DIR).join(INDEX))?,
        })
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.events.flush()?;
        self.stats.flush()?;
        self.corpus_index.flush()?;
        self.failure_index.flush()
    }
}

impl Observer for DiskObserver {
    fn on_event(&mut self, event: &ExecEvent) -> io::Result<()> {
        if self.log == LogMode::Full || event.is_interesting() {
            jsonl_line(&mut self.events, event)?;
        }
        Ok(())
    }

    fn on_stats(&mut self, stats: &CampaignStats) -> io::Result<()> {
        jsonl_line(&mut self.stats, stats)
    }

    fn on_save(&mut self, entry: &CorpusEntry) -> io::Result<()> {
        let file = entry.file_name();
        let corpus = self.dir.join(CORPUS_DIR);
        fs::write(corpus.join(&file), &entry.data)?;
        fs::write(corpus.join("inputs").join(format!("id_{}", entry.id)), &entry.input)?;
        jsonl_line(
            &mut self.corpus_index,
            &CorpusRecord {
                id: entry.id,
                parent: entry.parent,
                reason: entry.reason,
                discovered_secs: entry.discovered_secs,
                result: entry.result,
                coverage: entry.coverage.ids().to_vec(),
                file,
            },
        )
    }

    fn on_failure(&mut self, failure: &FailureEntry) -> io::Result<()> {
        let file = failure.file_name();
        let failures = self.dir.join(FAILURES_DIR);
        fs::write(failures.join(&file), &failure.data)?;
        let stem = file.trim_end_matches(".bin");
        fs::write(failures.join("inputs").join(stem), &failure.input)?;
        jsonl_line(
            &mut self.failure_index,
            &FailureRecord {
                key: failure.key.clone(),
                exec_index: failure.exec_index,
                parent: failure.parent,
                discovered_secs: failure.discovered_secs,
                coverage: failure.coverage.ids().to_vec(),
                file,
            },
        )
    }
}

/// Everything the report needs from a run directory.
#[derive(Clone, Debug)]
pub struct RunLogs {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub events: Vec<ExecEvent>,
    pub stats: Vec<CampaignStats>,
}

impl RunLogs {
    pub fn load(dir: &Path) -> Result<Self, ExperimentError> {
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: read_json(&dir.join(MANIFEST))?,
            events: read_jsonl(&dir.join(EVENTS))?,
            stats: read_jsonl(&dir.join(STATS))?,
        })
    }
}

/// Run directories at or below `root`, sorted.
pub fn find_run_dirs(root: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join(MANIFEST).is_file() {
            out.push(dir);
            continue;
        }
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::CoverageSet;

    #[test]
    fn interesting_mode_skips_plain_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut obs = DiskObserver::create(dir.path(), LogMode::Interesting).unwrap();
        let plain = ExecEvent {
            exec_index: 0,
            parent_id: None,
            result: RunResult::Invalid,
            new_total: vec![],
            new_valid: vec![],
            failure_key: None,
        };
        let novel = ExecEvent {
            exec_index: 1,
            new_total: vec![7],
            ..plain.clone()
        };
        obs.on_event(&plain).unwrap();
        obs.on_event(&novel).unwrap();
        obs.flush().unwrap();
        let events: Vec<ExecEvent> = read_jsonl(&dir.path().join(EVENTS)).unwrap();
        assert_eq!(events, vec![novel]);
    }

    #[test]
    fn saved_entries_are_indexed() {
        let dir = tempfile::tempdir().unwrap();
        let mut obs = DiskObserver::create(dir.path(), LogMode::Full).unwrap();
        let entry = CorpusEntry {
            id: 5,
            parent: Some(0),
            reason: SaveReason::NewValidCoverage,
            discovered_secs: 1.5,
            result: RunResult::Valid,
            coverage: CoverageSet::from_ids([3, 9]),
            data: vec![1, 2, 3],
            input: b"<a/>".to_vec(),
        };
        obs.on_save(&entry).unwrap();
        obs.flush().unwrap();
        let index: Vec<CorpusRecord> = read_jsonl(&dir.path().join(CORPUS_DIR).join(INDEX)).unwrap();
        assert_eq!(index[0].file, "id_5_NEW_VALID_COVERAGE.bin");
        assert_eq!(index[0].coverage, vec![3, 9]);
        assert_eq!(fs::read(dir.path().join("corpus/id_5_NEW_VALID_COVERAGE.bin")).unwrap(), vec![1, 2, 3]);
        assert_eq!(fs::read(dir.path().join("corpus/inputs/id_5")).unwrap(), b"<a/>");
    }

    #[test]
    fn truncated_jsonl_is_reported_with_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        fs::write(&path, "{\"t\":0.0,\"execs\":1,\"valid\":1,\"invalid\":0,\"failures\":0,\"totalCov\":1,\"validCov\":1,\"semCov\":0,\"semRatio\":0.0,\"corpus\":1,\"uniqueFailures\":0}\n{\"t\":1.0,\"ex").unwrap();
        let err = read_jsonl::<CampaignStats>(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
