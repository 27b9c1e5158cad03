//! Running one campaign into a directory, and replaying it.

use super::artifacts::{
    read_json, read_jsonl, write_json, CorpusRecord, DiskObserver, FailureRecord, Manifest, Summary, TriageRecord,
    CORPUS_DIR, FAILURES_DIR, FORMAT_VERSION, INDEX, MANIFEST, PLANTED_BUGS, SEEDS_DIR, SUMMARY, TRIAGE,
};
use super::config::{build_target, CampaignConfig};
use super::report::{exec_time, RunSummary};
use super::ExperimentError;
use crate::coverage::CoverageSet;
use crate::engine::{
    cgf_campaign, quickcheck_campaign, replay, triage, zest_campaign, CampaignResult, CampaignStats, CorpusEntry,
    EngineKind, ExecEvent, FailureEntry, Observer, ReplayError,
};
use crate::gen::{generator_by_name, Generator};
use crate::outcome::{FailureKey, RunResult};
use crate::targets::{PlantedBug, Target};
use std::fs;
use std::io;
use std::path::Path;

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PLANTED: i32 = 10;
pub const EXIT_UNPLANTED: i32 = 11;

/// Forwards to the disk writer and keeps what the in-memory report needs.
struct Tee<'a> {
    disk: &'a mut DiskObserver,
    stats: Vec<CampaignStats>,
    failing: Vec<(u64, FailureKey)>,
}

impl Observer for Tee<'_> {
    fn on_event(&mut self, event: &ExecEvent) -> io::Result<()> {
        if let Some(key) = &event.failure_key {
            self.failing.push((event.exec_index, key.clone()));
        }
        self.disk.on_event(event)
    }

    fn on_stats(&mut self, stats: &CampaignStats) -> io::Result<()> {
        self.stats.push(stats.clone());
        self.disk.on_stats(stats)
    }

    fn on_save(&mut self, entry: &CorpusEntry) -> io::Result<()> {
        self.disk.on_save(entry)
    }

    fn on_failure(&mut self, failure: &FailureEntry) -> io::Result<()> {
        self.disk.on_failure(failure)
    }
}

/// A finished campaign.
#[derive(Debug)]
pub struct CampaignRun {
    pub result: CampaignResult,
    /// The stats stream, as emitted.
    pub stats: Vec<CampaignStats>,
    /// Execution index and key of every failing run.
    pub failing: Vec<(u64, FailureKey)>,
    pub planted: Vec<PlantedBug>,
    pub exit_code: i32,
}

impl CampaignRun {
    /// Ids of planted bugs this campaign triggered.
    pub fn planted_found(&self) -> Vec<String> {
        let keys = self.result.failure_keys();
        self.planted.iter().filter(|b| keys.contains(&b.key)).map(|b| b.id.clone()).collect()
    }

    pub fn summary(&self, manifest: &Manifest) -> RunSummary {
        RunSummary::from_memory(manifest, &self.result, &self.stats, &self.failing)
    }
}

fn exit_code(planted: &[PlantedBug], result: &CampaignResult) -> i32 {
    let keys = result.failure_keys();
    if planted.iter().any(|b| keys.contains(&b.key)) {
        EXIT_PLANTED
    } else if !keys.is_empty() {
        EXIT_UNPLANTED
    } else {
        EXIT_CLEAN
    }
}

pub fn manifest_for(config: &CampaignConfig, generator: Option<&dyn Generator>) -> Manifest {
    let settings = config.settings();
    Manifest {
        format: FORMAT_VERSION,
        engine: config.engine,
        target: config.target.clone(),
        strict_warnings: config.strict_warnings,
        generator: generator.map(|g| g.name().to_string()),
        generator_config: generator.map(|g| g.config().clone()),
        generator_fingerprint: generator.map(|g| g.fingerprint()),
        seed: config.seed,
        budget: config.budget,
        mutation: settings.mutation,
        max_sequence_len: settings.max_sequence_len,
        virtual_clock_us: config.virtual_clock_us,
        log: config.log,
        seed_inputs: (0..config.seed_inputs.len()).map(|i| format!("{SEEDS_DIR}/seed_{i}")).collect(),
    }
}

/// Run one campaign and write its artifacts under `config.output`.
pub fn run_campaign(config: &CampaignConfig) -> Result<(Manifest, CampaignRun), ExperimentError> {
    config.validate()?;
    let target = config.build_target()?;
    let generator = config.build_generator()?;
    let mut seeds = Vec::new();
    for path in &config.seed_inputs {
        let bytes = fs::read(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read seed input {}: {e}", path.display())))?;
        seeds.push(bytes);
    }

    let dir = &config.output;
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let manifest = manifest_for(config, generator.as_deref());
    if !seeds.is_empty() {
        fs::create_dir_all(dir.join(SEEDS_DIR)).map_err(|e| ExperimentError::io(dir, e))?;
        for (name, bytes) in manifest.seed_inputs.iter().zip(&seeds) {
            fs::write(dir.join(name), bytes).map_err(|e| ExperimentError::io(dir, e))?;
        }
    }
    write_json(&dir.join(MANIFEST), &manifest).map_err(|e| ExperimentError::io(dir, e))?;
    let planted = target.planted_bugs();
    write_json(&dir.join(PLANTED_BUGS), &planted).map_err(|e| ExperimentError::io(dir, e))?;

    let mut disk = DiskObserver::create(dir, config.log).map_err(|e| ExperimentError::io(dir, e))?;
    let mut tee = Tee {
        disk: &mut disk,
        stats: Vec::new(),
        failing: Vec::new(),
    };
    let settings = config.settings();
    let result = match (config.engine, generator.as_deref()) {
        (EngineKind::Zest, Some(g)) => zest_campaign(target.as_ref(), g, &settings, &mut tee),
        (EngineKind::QuickCheck, Some(g)) => quickcheck_campaign(target.as_ref(), g, &settings, &mut tee),
        (EngineKind::Cgf, _) => cgf_campaign(target.as_ref(), &seeds, &settings, &mut tee),
        (engine, None) => return Err(ExperimentError::Config(format!("{engine} needs a generator"))),
    }?;
    let Tee { stats, failing, .. } = tee;
    disk.flush().map_err(|e| ExperimentError::io(dir, e))?;

    let run = CampaignRun {
        exit_code: exit_code(&planted, &result),
        result,
        stats,
        failing,
        planted,
    };
    write_json(&dir.join(TRIAGE), &triage_records(&run)).map_err(|e| ExperimentError::io(dir, e))?;
    let summary = Summary {
        stats: run.result.stats.clone(),
        planted_found: run.planted_found(),
        other_failures: run
            .result
            .failures
            .iter()
            .filter(|f| run.planted.iter().all(|b| b.key != f.key))
            .count(),
        exit_code: run.exit_code,
    };
    write_json(&dir.join(SUMMARY), &summary).map_err(|e| ExperimentError::io(dir, e))?;
    Ok((manifest, run))
}

fn triage_records(run: &CampaignRun) -> Vec<TriageRecord> {
    let stream = run.failing.iter().map(|(idx, key)| {
        let witness = run
            .result
            .failures
            .iter()
            .find(|f| f.exec_index == *idx)
            .map(|f| f.input.clone())
            .unwrap_or_default();
        (key.clone(), exec_time(&run.stats, *idx), witness)
    });
    triage(stream)
        .into_iter()
        .map(|(key, t)| TriageRecord {
            digest: key.digest(),
            planted: run.planted.iter().find(|b| b.key == key).map(|b| b.id.clone()),
            first_secs: t.first_secs,
            count: t.count,
            witness: String::from_utf8_lossy(&t.witness).into_owned(),
            key,
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayReport {
    pub corpus_checked: usize,
    pub failures_checked: usize,
    /// One line per entry whose replay differed from the record.
    pub mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn all_match(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Rebuild the generator a run used, refusing a different one.
pub fn generator_for_run(
    manifest: &Manifest,
    requested: Option<&str>,
) -> Result<Option<Box<dyn Generator>>, ExperimentError> {
    let mismatch = |m: String| ExperimentError::Replay(ReplayError::ConfigMismatch(m));
    match (&manifest.generator, requested) {
        (None, None) => Ok(None),
        (None, Some(r)) => Err(mismatch(format!("run used raw inputs, not generator `{r}`"))),
        (Some(g), Some(r)) if g != r => Err(mismatch(format!("run used generator `{g}`, not `{r}`"))),
        (Some(g), _) => {
            let generator = match &manifest.generator_config {
                Some(c) => generator_by_name(g, Some(c.clone())),
                None => generator_by_name(g, None),
            }
            .map_err(|e| mismatch(e.to_string()))?;
            if let Some(expected) = &manifest.generator_fingerprint {
                if generator.fingerprint() != *expected {
                    return Err(mismatch(format!(
                        "generator fingerprint {} does not match recorded {expected}",
                        generator.fingerprint()
                    )));
                }
            }
            Ok(Some(generator))
        }
    }
}

/// Replay every corpus and failure entry of a run directory.
pub fn replay_run(dir: &Path, requested_generator: Option<&str>) -> Result<ReplayReport, ExperimentError> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    let target = build_target(&manifest.target, manifest.strict_warnings)?;
    let generator = generator_for_run(&manifest, requested_generator)?;
    replay_entries(dir, target.as_ref(), generator.as_deref())
}

fn replay_entries(
    dir: &Path,
    target: &dyn Target,
    generator: Option<&dyn Generator>,
) -> Result<ReplayReport, ExperimentError> {
    let mut report = ReplayReport::default();
    let corpus: Vec<CorpusRecord> = read_jsonl(&dir.join(CORPUS_DIR).join(INDEX))?;
    for rec in corpus {
        let path = dir.join(CORPUS_DIR).join(&rec.file);
        let data = fs::read(&path).map_err(|e| ExperimentError::io(&path, e))?;
        let (_, outcome) = replay(target, generator, &data)?;
        report.corpus_checked += 1;
        let coverage = CoverageSet::from_ids(rec.coverage.iter().copied());
        if outcome.result != rec.result || outcome.coverage != coverage || outcome.failure.is_some() {
            report.mismatches.push(format!(
                "{}: recorded {} with {} points, replayed {} with {} points",
                rec.file,
                rec.result,
                coverage.len(),
                outcome.result,
                outcome.coverage.len()
            ));
        }
    }
    let failures: Vec<FailureRecord> = read_jsonl(&dir.join(FAILURES_DIR).join(INDEX))?;
    for rec in failures {
        let path = dir.join(FAILURES_DIR).join(&rec.file);
        let data = fs::read(&path).map_err(|e| ExperimentError::io(&path, e))?;
        let (_, outcome) = replay(target, generator, &data)?;
        report.failures_checked += 1;
        let coverage = CoverageSet::from_ids(rec.coverage.iter().copied());
        if outcome.result != RunResult::Failure
            || outcome.failure.as_ref() != Some(&rec.key)
            || outcome.coverage != coverage
        {
            let got = outcome.failure.map_or_else(|| outcome.result.to_string(), |k| k.to_string());
            report.mismatches.push(format!("{}: recorded {}, replayed {got}", rec.file, rec.key));
        }
    }
    Ok(report)
}
