//! Campaign runner and experiment orchestrator.
//!
//! [`run_campaign`] runs one engine into an output directory.
//! [`run_experiment`] runs a matrix of engines and repetitions with paired
//! seeds and aggregates reliability, mean time to find, and coverage over
//! time. [`report_from_dirs`] recomputes the same report from the logs alone.

mod artifacts;
mod config;
mod report;
mod run;

pub use artifacts::{
    find_run_dirs, read_json, read_jsonl, CorpusRecord, DiskObserver, FailureRecord, Manifest, RunLogs, Summary,
    TriageRecord, CORPUS_DIR, EVENTS, FAILURES_DIR, INDEX, MANIFEST, PLANTED_BUGS, SEEDS_DIR, STATS, SUMMARY, TRIAGE,
};
pub use config::{
    build_generator, build_target, default_generator_for, CampaignConfig, ConfigFile, GeneratorOverrides, LogMode,
};
pub use report::{
    aggregate, exec_time, render_table, report_from_dirs, write_csv, write_report, Band, BugRow, CellReport,
    ExperimentReport, LogReport, RunSummary, SeriesPoint,
};
pub use run::{
    generator_for_run, manifest_for, replay_run, run_campaign, CampaignRun, ReplayReport, EXIT_CLEAN, EXIT_CONFIG,
    EXIT_IO, EXIT_PLANTED, EXIT_UNPLANTED,
};

use crate::engine::{derive_seed, generated_seed, Budget, CampaignError, EngineKind, MutationParams, ReplayError};
use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt log: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

impl ExperimentError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_)
            | ExperimentError::Replay(_)
            | ExperimentError::Campaign(CampaignError::Config(_) | CampaignError::Generator(_)) => EXIT_CONFIG,
            ExperimentError::Io { .. } | ExperimentError::Corrupt(_) | ExperimentError::Campaign(CampaignError::Io(_)) => {
                EXIT_IO
            }
        }
    }
}

/// Salt of the per-repetition seed.
const REPETITION_SALT: u64 = 0x7265_7065_6174;

/// Seed of repetition `rep`. Every engine in a repetition gets the same one.
pub fn repetition_seed(base: u64, rep: usize) -> u64 {
    derive_seed(base, REPETITION_SALT ^ rep as u64)
}

/// Engines × repetitions on one target.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub target: String,
    /// Used by zest and quickcheck, and to find the cgf seed input.
    pub generator: String,
    pub generator_overrides: GeneratorOverrides,
    pub engines: Vec<EngineKind>,
    pub repetitions: usize,
    pub budget: Budget,
    pub base_seed: u64,
    pub mutation: MutationParams,
    pub output: PathBuf,
    pub log: LogMode,
    pub virtual_clock_us: Option<u64>,
    pub strict_warnings: bool,
    pub band: Band,
    /// Campaigns run at once; defaults to the available parallelism.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(target: &str, generator: &str, output: impl Into<PathBuf>) -> Self {
        Self {
            target: target.into(),
            generator: generator.into(),
            generator_overrides: GeneratorOverrides::default(),
            engines: EngineKind::ALL.to_vec(),
            repetitions: 10,
            budget: Budget::Duration(std::time::Duration::from_secs(60)),
            base_seed: 0,
            mutation: MutationParams::default(),
            output: output.into(),
            log: LogMode::Full,
            virtual_clock_us: None,
            strict_warnings: false,
            band: Band::MinMax,
            jobs: None,
        }
    }

    pub fn run_dir(&self, engine: EngineKind, rep: usize) -> PathBuf {
        self.output.join(engine.as_str()).join(format!("rep_{rep}"))
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions < 2 {
            return Err(ExperimentError::Config("an experiment needs at least 2 repetitions".into()));
        }
        if self.engines.is_empty() {
            return Err(ExperimentError::Config("an experiment needs at least one engine".into()));
        }
        if self.jobs == Some(0) {
            return Err(ExperimentError::Config("jobs must be positive".into()));
        }
        build_target(&self.target, self.strict_warnings)?;
        build_generator(&self.generator, &self.generator_overrides)?;
        Ok(())
    }

    /// The campaign for one cell of the matrix, without its cgf seed input.
    pub fn campaign(&self, engine: EngineKind, rep: usize) -> CampaignConfig {
        let generator = engine.uses_generator().then_some(self.generator.as_str());
        let mut c = CampaignConfig::new(engine, &self.target, generator, self.run_dir(engine, rep));
        c.generator_overrides = self.generator_overrides.clone();
        c.budget = self.budget;
        c.seed = repetition_seed(self.base_seed, rep);
        c.mutation = self.mutation;
        c.log = self.log;
        c.virtual_clock_us = self.virtual_clock_us;
        c.strict_warnings = self.strict_warnings;
        c
    }
}

impl ConfigFile {
    /// Resolve into an experiment. The generator defaults to the one
    /// paired with the target.
    pub fn experiment(&self) -> Result<ExperimentConfig, ExperimentError> {
        let target = self.target.clone().ok_or_else(|| ExperimentError::Config("missing target".into()))?;
        let generator = match &self.generator {
            Some(g) => g.clone(),
            None => default_generator_for(&target)
                .ok_or_else(|| ExperimentError::Config(format!("unknown target `{target}`")))?
                .to_string(),
        };
        let output = self.output.clone().ok_or_else(|| ExperimentError::Config("missing output directory".into()))?;
        let mut c = ExperimentConfig::new(&target, &generator, output);
        if let Some(engines) = &self.engines {
            c.engines = engines
                .iter()
                .map(|e| e.parse())
                .collect::<Result<_, _>>()
                .map_err(ExperimentError::Config)?;
        }
        c.generator_overrides = self.generator_config.clone();
        if let Some(b) = self.budget()? {
            c.budget = b;
        }
        c.repetitions = self.repetitions.unwrap_or(c.repetitions);
        c.base_seed = self.seed.unwrap_or(0);
        c.mutation = self.mutation();
        c.log = self.log_mode()?;
        c.virtual_clock_us = self.virtual_clock_us;
        c.strict_warnings = self.strict_warnings.unwrap_or(false);
        if self.ci95 == Some(true) {
            c.band = Band::Ci95;
        }
        c.jobs = self.jobs;
        Ok(c)
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// Aggregated from the campaigns as they ran.
    pub report: ExperimentReport,
    /// Aggregated again from the run directories.
    pub log_report: ExperimentReport,
    pub runs: Vec<RunSummary>,
    /// Campaigns that did not complete: engine, repetition, error.
    pub failed: Vec<(EngineKind, usize, String)>,
}

impl ExperimentOutcome {
    /// The in-memory and log-derived reports agree.
    pub fn consistent(&self) -> bool {
        self.report == self.log_report
    }
}

/// Write the cgf seed input of repetition `rep`: the first valid input
/// sampled from the generator.
fn cgf_seed_file(config: &ExperimentConfig, rep: usize) -> Result<PathBuf, ExperimentError> {
    let target = build_target(&config.target, config.strict_warnings)?;
    let generator = build_generator(&config.generator, &config.generator_overrides)?;
    let seed = generated_seed(target.as_ref(), generator.as_ref(), repetition_seed(config.base_seed, rep))?;
    let dir = config.output.join("seeds");
    std::fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
    let path = dir.join(format!("rep_{rep}.input"));
    std::fs::write(&path, seed).map_err(|e| ExperimentError::io(&path, e))?;
    Ok(path)
}

fn run_cell(config: &ExperimentConfig, engine: EngineKind, rep: usize) -> Result<RunSummary, ExperimentError> {
    let mut campaign = config.campaign(engine, rep);
    if engine == EngineKind::Cgf {
        campaign.seed_inputs = vec![cgf_seed_file(config, rep)?];
    }
    let (manifest, run) = run_campaign(&campaign)?;
    Ok(run.summary(&manifest))
}

/// Run every (engine, repetition) cell, then aggregate.
///
/// Campaigns run on a pool of threads, one campaign per thread at a time.
/// A failed campaign is reported in `failed` and left out of the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output).map_err(|e| ExperimentError::io(&config.output, e))?;
    let cells: VecDeque<(EngineKind, usize)> = (0..config.repetitions)
        .flat_map(|rep| config.engines.iter().map(move |&e| (e, rep)))
        .collect();
    let workers = config
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .min(cells.len());
    let queue = Mutex::new(cells);
    let done = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let Some((engine, rep)) = queue.lock().expect("queue lock").pop_front() else {
                    break;
                };
                let outcome = run_cell(config, engine, rep);
                done.lock().expect("results lock").push((engine, rep, outcome));
            });
        }
    });

    let mut done = done.into_inner().expect("results lock");
    done.sort_by_key(|(engine, rep, _)| (*engine, *rep));
    let mut runs = Vec::new();
    let mut dirs = Vec::new();
    let mut failed = Vec::new();
    for (engine, rep, outcome) in done {
        match outcome {
            Ok(summary) => {
                runs.push(summary);
                dirs.push(config.run_dir(engine, rep));
            }
            Err(e) => failed.push((engine, rep, e.to_string())),
        }
    }
    let report = aggregate(&runs, config.band)?;
    let log_report = report_from_dirs(&dirs, config.band)?.report;
    write_report(&report, &config.output).map_err(|e| ExperimentError::io(&config.output, e))?;
    Ok(ExperimentOutcome {
        report,
        log_report,
        runs,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..20).map(|r| repetition_seed(42, r)).collect();
        let unique: std::collections::BTreeSet<_> = seeds.iter().collect();
        assert_eq!(unique.len(), 20);
        assert_eq!(repetition_seed(42, 3), seeds[3]);
        assert_ne!(repetition_seed(43, 3), seeds[3]);
    }

    #[test]
    fn cells_share_the_repetition_seed() {
        let c = ExperimentConfig::new("minixml", "xml", "out");
        assert_eq!(c.campaign(EngineKind::Zest, 2).seed, c.campaign(EngineKind::Cgf, 2).seed);
        assert_eq!(c.campaign(EngineKind::Cgf, 2).generator, None);
        assert_eq!(c.campaign(EngineKind::QuickCheck, 0).output, PathBuf::from("out/quickcheck/rep_0"));
    }

    #[test]
    fn one_repetition_is_rejected() {
        let mut c = ExperimentConfig::new("minixml", "xml", "out");
        c.repetitions = 1;
        assert!(matches!(run_experiment(&c), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config("x".into()).exit_code(), EXIT_CONFIG);
        let io = ExperimentError::io(Path::new("x"), std::io::Error::other("denied"));
        assert_eq!(io.exit_code(), EXIT_IO);
    }
}
