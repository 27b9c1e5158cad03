use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zest::experiment::{
    render_table, replay_run, report_from_dirs, run_campaign, run_experiment, write_report, Band, ConfigFile,
    ExperimentError, GeneratorOverrides,
};

#[derive(Parser)]
#[command(name = "zest", version, about = "Semantic fuzzing with parametric generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one campaign.
    Run(Flags),
    /// Run engines x repetitions with paired seeds and report on them.
    Experiment(Flags),
    /// Replay every saved entry of a run directory.
    Replay {
        dir: PathBuf,
        /// Refuse to replay unless the run used this generator.
        #[arg(long)]
        generator: Option<String>,
    },
    /// Recompute the report from run directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where to write report.txt, coverage.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ci95: bool,
    },
}

#[derive(Args)]
struct Flags {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// zest, cgf or quickcheck.
    #[arg(long)]
    engine: Option<String>,
    /// Comma-separated engines of an experiment.
    #[arg(long, value_delimiter = ',')]
    engines: Option<Vec<String>>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    generator: Option<String>,
    /// e.g. 60s, 5m or 10000execs.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Raw seed input for cgf; repeatable.
    #[arg(long = "seed-input")]
    seed_inputs: Vec<PathBuf>,
    /// full or interesting.
    #[arg(long)]
    log: Option<String>,
    /// Advance time by this many microseconds per execution.
    #[arg(long)]
    virtual_clock: Option<u64>,
    #[arg(long)]
    strict_warnings: bool,
    #[arg(long)]
    mean_mutations: Option<f64>,
    #[arg(long)]
    mean_length: Option<f64>,
    /// Report 95% confidence intervals instead of min/max.
    #[arg(long)]
    ci95: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    name_pool: Option<PathBuf>,
    #[arg(long)]
    attribute_pool: Option<PathBuf>,
    #[arg(long)]
    value_pool: Option<PathBuf>,
}

impl Flags {
    fn resolve(self) -> Result<ConfigFile, ExperimentError> {
        let mut config = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        config.overlay(ConfigFile {
            engine: self.engine,
            engines: self.engines,
            target: self.target,
            generator: self.generator,
            budget: self.budget,
            seed: self.seed,
            output: self.out,
            repetitions: self.reps,
            seed_inputs: self.seed_inputs,
            log: self.log,
            virtual_clock_us: self.virtual_clock,
            strict_warnings: self.strict_warnings.then_some(true),
            mean_mutations: self.mean_mutations,
            mean_length: self.mean_length,
            ci95: self.ci95.then_some(true),
            jobs: self.jobs,
            generator_config: GeneratorOverrides {
                name_pool: self.name_pool,
                attribute_pool: self.attribute_pool,
                value_pool: self.value_pool,
                ..Default::default()
            },
        });
        Ok(config)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<i32, ExperimentError> {
    match command {
        Command::Run(flags) => {
            let config = flags.resolve()?.campaign()?;
            let (_, run) = run_campaign(&config)?;
            let s = &run.result.stats;
            println!(
                "{} execs ({} valid, {} invalid, {} failing), {} points, {} semantic, corpus {}, {} unique failures",
                s.execs, s.valid, s.invalid, s.failures, s.total_cov, s.sem_cov, s.corpus, s.unique_failures
            );
            for id in run.planted_found() {
                println!("found planted bug {id}");
            }
            println!("artifacts in {}", config.output.display());
            Ok(run.exit_code)
        }
        Command::Experiment(flags) => {
            let config = flags.resolve()?.experiment()?;
            let outcome = run_experiment(&config)?;
            print!("{}", render_table(&outcome.report));
            for (engine, rep, e) in &outcome.failed {
                eprintln!("{engine} rep {rep} failed: {e}");
            }
            if !outcome.consistent() {
                eprintln!("warning: the report recomputed from the logs differs from the in-memory report");
                return Ok(1);
            }
            Ok(if outcome.failed.is_empty() { 0 } else { 1 })
        }
        Command::Replay { dir, generator } => {
            let report = replay_run(&dir, generator.as_deref())?;
            for m in &report.mismatches {
                println!("mismatch: {m}");
            }
            println!(
                "replayed {} corpus entries and {} failures; {} mismatches",
                report.corpus_checked,
                report.failures_checked,
                report.mismatches.len()
            );
            Ok(if report.all_match() { 0 } else { 1 })
        }
        Command::Report { dirs, out, ci95 } => {
            let band = if ci95 { Band::Ci95 } else { Band::MinMax };
            let logs = report_from_dirs(&dirs, band)?;
            for (path, e) in &logs.errors {
                eprintln!("skipped {}: {e}", path.display());
            }
            print!("{}", render_table(&logs.report));
            if let Some(out) = out {
                write_report(&logs.report, &out).map_err(|e| ExperimentError::io(&out, e))?;
            }
            Ok(if logs.errors.is_empty() { 0 } else { 1 })
        }
    }
}
