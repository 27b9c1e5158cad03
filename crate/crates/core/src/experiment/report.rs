//! Reliability, mean time to find, and coverage over time.
//!
//! The same aggregation runs over campaigns held in memory and over run
//! directories read back from disk, so the two can be compared exactly.

use super::artifacts::{find_run_dirs, Manifest, RunLogs};
use super::config::build_target;
use super::ExperimentError;
use crate::engine::{CampaignResult, CampaignStats, EngineKind};
use crate::outcome::FailureKey;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Time of execution `exec_index`: the first stats record that counts it.
pub fn exec_time(stats: &[CampaignStats], exec_index: u64) -> f64 {
    let i = stats.partition_point(|s| s.execs <= exec_index);
    stats.get(i).or(stats.last()).map_or(0.0, |s| s.t)
}

/// What one campaign contributes to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub engine: EngineKind,
    pub target: String,
    pub strict_warnings: bool,
    pub seed: u64,
    pub final_stats: CampaignStats,
    /// First discovery time per key.
    pub first_found: BTreeMap<String, f64>,
    /// Failing executions per key.
    pub failure_counts: BTreeMap<String, usize>,
    pub keys: BTreeMap<String, FailureKey>,
    pub stats: Vec<CampaignStats>,
}

fn key_id(key: &FailureKey) -> String {
    key.to_string()
}

impl RunSummary {
    pub fn from_memory(
        manifest: &Manifest,
        result: &CampaignResult,
        stats: &[CampaignStats],
        failing: &[(u64, FailureKey)],
    ) -> Self {
        let mut s = Self::empty(manifest);
        s.final_stats = result.stats.clone();
        s.stats = stats.to_vec();
        for f in &result.failures {
            s.first_found.insert(key_id(&f.key), f.discovered_secs);
            s.keys.insert(key_id(&f.key), f.key.clone());
        }
        for (_, key) in failing {
            *s.failure_counts.entry(key_id(key)).or_default() += 1;
        }
        s
    }

    pub fn from_logs(logs: &RunLogs) -> Self {
        let mut s = Self::empty(&logs.manifest);
        s.final_stats = logs.stats.last().cloned().unwrap_or_default();
        s.stats = logs.stats.clone();
        for e in &logs.events {
            let Some(key) = &e.failure_key else { continue };
            let id = key_id(key);
            *s.failure_counts.entry(id.clone()).or_default() += 1;
            if !s.first_found.contains_key(&id) {
                s.first_found.insert(id.clone(), exec_time(&logs.stats, e.exec_index));
                s.keys.insert(id, key.clone());
            }
        }
        s
    }

    fn empty(manifest: &Manifest) -> Self {
        Self {
            engine: manifest.engine,
            target: manifest.target.clone(),
            strict_warnings: manifest.strict_warnings,
            seed: manifest.seed,
            final_stats: CampaignStats::default(),
            first_found: BTreeMap::new(),
            failure_counts: BTreeMap::new(),
            keys: BTreeMap::new(),
            stats: Vec::new(),
        }
    }

    /// Last stats record at or before `t`.
    pub fn at(&self, t: f64) -> CampaignStats {
        let i = self.stats.partition_point(|s| s.t <= t);
        if i == 0 {
            CampaignStats::default()
        } else {
            self.stats[i - 1].clone()
        }
    }
}

/// How the coverage band around the mean is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    #[default]
    MinMax,
    /// Student-t 95% interval of the mean.
    Ci95,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BugRow {
    pub key: FailureKey,
    /// Id of the planted bug with this key.
    pub planted: Option<String>,
    pub found: usize,
    pub runs: usize,
    pub reliability: f64,
    /// Mean first-discovery time over the runs that found it.
    pub mtf: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesPoint {
    pub t: u64,
    pub total_mean: f64,
    pub total_lo: f64,
    pub total_hi: f64,
    pub sem_mean: f64,
    pub sem_lo: f64,
    pub sem_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellReport {
    pub target: String,
    pub engine: EngineKind,
    pub runs: usize,
    /// Final semantic coverage of each run, by seed order.
    pub final_sem: Vec<usize>,
    pub final_total: Vec<usize>,
    pub bugs: Vec<BugRow>,
    pub series: Vec<SeriesPoint>,
}

impl CellReport {
    pub fn bug(&self, id_or_key: &str) -> Option<&BugRow> {
        self.bugs
            .iter()
            .find(|b| b.planted.as_deref() == Some(id_or_key) || b.key.to_string() == id_or_key)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub band: Band,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, target: &str, engine: EngineKind) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.target == target && c.engine == engine)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn band(xs: &[f64], kind: Band) -> (f64, f64, f64) {
    let m = mean(xs);
    match kind {
        _ if xs.is_empty() => (0.0, 0.0, 0.0),
        Band::MinMax => (
            m,
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        Band::Ci95 if xs.len() < 2 => (m, m, m),
        Band::Ci95 => {
            let n = xs.len() as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("n >= 2").inverse_cdf(0.975);
            let half = t * (var / n).sqrt();
            (m, m - half, m + half)
        }
    }
}

/// Aggregate campaigns into per-(target, engine) cells.
///
/// Runs are ordered by seed within a cell, so the result does not depend
/// on the order they finished in.
pub fn aggregate(runs: &[RunSummary], kind: Band) -> Result<ExperimentReport, ExperimentError> {
    let mut cells: BTreeMap<(String, EngineKind), Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        cells.entry((r.target.clone(), r.engine)).or_default().push(r);
    }
    let mut registries = BTreeMap::new();
    for r in runs {
        if !registries.contains_key(&r.target) {
            registries.insert(r.target.clone(), build_target(&r.target, r.strict_warnings)?.planted_bugs());
        }
    }
    // every key seen for a target gets a row in every engine of that target
    let mut keys: BTreeMap<String, BTreeMap<String, FailureKey>> = BTreeMap::new();
    for (target, bugs) in &registries {
        let k = keys.entry(target.clone()).or_default();
        for b in bugs {
            k.insert(key_id(&b.key), b.key.clone());
        }
    }
    for r in runs {
        keys.entry(r.target.clone()).or_default().extend(r.keys.clone());
    }

    let mut report = ExperimentReport { band: kind, cells: Vec::new() };
    for ((target, engine), mut members) in cells {
        members.sort_by_key(|r| r.seed);
        let planted = &registries[&target];
        let bugs = keys[&target]
            .iter()
            .map(|(id, key)| {
                let times: Vec<f64> = members.iter().filter_map(|r| r.first_found.get(id).copied()).collect();
                BugRow {
                    key: key.clone(),
                    planted: planted.iter().find(|b| b.key == *key).map(|b| b.id.clone()),
                    found: times.len(),
                    runs: members.len(),
                    reliability: times.len() as f64 / members.len() as f64,
                    mtf: (!times.is_empty()).then(|| mean(&times)),
                }
            })
            .collect();
        let horizon = members
            .iter()
            .filter_map(|r| r.stats.last())
            .map(|s| s.t.ceil() as u64)
            .max()
            .unwrap_or(0);
        let series = (0..=horizon)
            .map(|t| {
                let at: Vec<CampaignStats> = members.iter().map(|r| r.at(t as f64)).collect();
                let total: Vec<f64> = at.iter().map(|s| s.total_cov as f64).collect();
                let sem: Vec<f64> = at.iter().map(|s| s.sem_cov as f64).collect();
                let (total_mean, total_lo, total_hi) = band(&total, kind);
                let (sem_mean, sem_lo, sem_hi) = band(&sem, kind);
                SeriesPoint {
                    t,
                    total_mean,
                    total_lo,
                    total_hi,
                    sem_mean,
                    sem_lo,
                    sem_hi,
                }
            })
            .collect();
        report.cells.push(CellReport {
            runs: members.len(),
            final_sem: members.iter().map(|r| r.final_stats.sem_cov).collect(),
            final_total: members.iter().map(|r| r.final_stats.total_cov).collect(),
            target,
            engine,
            bugs,
            series,
        });
    }
    Ok(report)
}

/// A report rebuilt from run directories.
#[derive(Debug)]
pub struct LogReport {
    pub report: ExperimentReport,
    pub runs: Vec<RunSummary>,
    /// Directories that could not be read, with the reason.
    pub errors: Vec<(PathBuf, String)>,
}

/// Recompute everything from the logs under `dirs`.
pub fn report_from_dirs(dirs: &[PathBuf], kind: Band) -> Result<LogReport, ExperimentError> {
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for root in dirs {
        let found = match find_run_dirs(root) {
            Ok(found) => found,
            Err(e) => {
                errors.push((root.clone(), e.to_string()));
                continue;
            }
        };
        for dir in found {
            match RunLogs::load(&dir) {
                Ok(logs) => runs.push(RunSummary::from_logs(&logs)),
                Err(e) => errors.push((dir, e.to_string())),
            }
        }
    }
    Ok(LogReport {
        report: aggregate(&runs, kind)?,
        runs,
        errors,
    })
}

fn percent(x: f64) -> String {
    if x == 0.0 {
        "✗".into()
    } else {
        format!("{:.0}%", x * 100.0)
    }
}

fn median(xs: &[usize]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable();
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2] as f64,
        n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
    }
}

/// Human-readable tables: coverage per cell, then reliability and MTF per bug.
pub fn render_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:<11} {:>5} {:>12} {:>12}", "target", "engine", "runs", "median sem", "median total");
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{:<12} {:<11} {:>5} {:>12} {:>12}",
            c.target,
            c.engine.as_str(),
            c.runs,
            median(&c.final_sem),
            median(&c.final_total)
        );
    }
    out.push('\n');
    let _ = writeln!(out, "{:<12} {:<11} {:<44} {:>11} {:>9}", "target", "engine", "bug", "reliability", "MTF");
    for c in &report.cells {
        for b in &c.bugs {
            let name = b.planted.clone().unwrap_or_else(|| b.key.to_string());
            let mtf = b.mtf.map_or_else(|| "✗".into(), |t| format!("{t:.2}s"));
            let _ = writeln!(
                out,
                "{:<12} {:<11} {:<44} {:>11} {:>9}",
                c.target,
                c.engine.as_str(),
                name,
                percent(b.reliability),
                mtf
            );
        }
    }
    out
}

pub fn write_csv(report: &ExperimentReport, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "target,engine,t,total_mean,total_lo,total_hi,sem_mean,sem_lo,sem_hi")?;
    for c in &report.cells {
        for p in &c.series {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                c.target, c.engine, p.t, p.total_mean, p.total_lo, p.total_hi, p.sem_mean, p.sem_lo, p.sem_hi
            )?;
        }
    }
    Ok(())
}

/// Write `report.txt`, `coverage.csv` and `report.json` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.txt"), render_table(report))?;
    let mut csv = io::BufWriter::new(std::fs::File::create(dir.join("coverage.csv"))?);
    write_csv(report, &mut csv)?;
    csv.flush()?;
    super::artifacts::write_json(&dir.join("report.json"), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Budget, MutationParams};
    use crate::experiment::LogMode;

    fn manifest(engine: EngineKind, seed: u64) -> Manifest {
        Manifest {
            format: 1,
            engine,
            target: "minixml".into(),
            strict_warnings: false,
            generator: None,
            generator_config: None,
            generator_fingerprint: None,
            seed,
            budget: Budget::Executions(1),
            mutation: MutationParams::default(),
            max_sequence_len: 1,
            virtual_clock_us: None,
            log: LogMode::Full,
            seed_inputs: vec![],
        }
    }

    fn stats(t: f64, sem: usize) -> CampaignStats {
        CampaignStats {
            t,
            execs: (t * 10.0) as u64 + 1,
            sem_cov: sem,
            total_cov: sem * 2,
            ..Default::default()
        }
    }

    fn run(seed: u64, found: &[(&FailureKey, f64)], series: Vec<CampaignStats>) -> RunSummary {
        let logs = RunLogs {
            dir: PathBuf::new(),
            manifest: manifest(EngineKind::Zest, seed),
            events: vec![],
            stats: series,
        };
        let mut s = RunSummary::from_logs(&logs);
        for (k, t) in found {
            s.first_found.insert(key_id(k), *t);
            s.keys.insert(key_id(k), (*k).clone());
        }
        s
    }

    #[test]
    fn mtf_is_the_mean_over_finding_runs() {
        let k = FailureKey::new("Panic", "boom", "minixml/semantic:1");
        let runs = vec![
            run(1, &[(&k, 10.0)], vec![]),
            run(2, &[(&k, 20.0)], vec![]),
            run(3, &[(&k, 30.0)], vec![]),
            run(4, &[], vec![]),
        ];
        let r = aggregate(&runs, Band::MinMax).unwrap();
        let row = r.cells[0].bugs.iter().find(|b| b.key == k).unwrap();
        assert_eq!(row.found, 3);
        assert_eq!(row.reliability, 0.75);
        assert_eq!(row.mtf, Some(20.0));
    }

    #[test]
    fn unfound_planted_bugs_have_rows_with_zero_reliability() {
        let r = aggregate(&[run(1, &[], vec![]), run(2, &[], vec![])], Band::MinMax).unwrap();
        let planted = build_target("minixml", false).unwrap().planted_bugs();
        assert_eq!(r.cells[0].bugs.len(), planted.len());
        for b in &r.cells[0].bugs {
            assert_eq!(b.reliability, 0.0);
            assert_eq!(b.mtf, None);
        }
        assert!(render_table(&r).contains('✗'));
    }

    #[test]
    fn seventeen_of_twenty_is_eighty_five_percent() {
        let k = FailureKey::new("Panic", "boom", "minixml/semantic:1");
        let hit = [(&k, 1.0)];
        let runs: Vec<_> = (0..20).map(|i| run(i, if i < 17 { &hit } else { &[] }, vec![])).collect();
        let r = aggregate(&runs, Band::MinMax).unwrap();
        assert_eq!(percent(r.cells[0].bug(&k.to_string()).unwrap().reliability), "85%");
    }

    #[test]
    fn series_steps_on_a_one_second_grid() {
        let runs = vec![
            run(1, &[], vec![stats(0.5, 4), stats(1.5, 8)]),
            run(2, &[], vec![stats(0.2, 2), stats(1.0, 6), stats(2.0, 10)]),
        ];
        let r = aggregate(&runs, Band::MinMax).unwrap();
        let s = &r.cells[0].series;
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].sem_lo, s[0].sem_hi), (0.0, 0.0));
        assert_eq!((s[1].sem_mean, s[1].sem_lo, s[1].sem_hi), (5.0, 4.0, 6.0));
        assert_eq!((s[2].sem_mean, s[2].sem_lo, s[2].sem_hi), (9.0, 8.0, 10.0));
    }

    #[test]
    fn ci95_matches_the_t_table() {
        // t(0.975, 4) = 2.776
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (m, lo, hi) = band(&xs, Band::Ci95);
        let half = 2.776_445 * (2.5f64 / 5.0).sqrt();
        assert_eq!(m, 3.0);
        assert!((hi - (m + half)).abs() < 1e-4 && (lo - (m - half)).abs() < 1e-4);
    }

    #[test]
    fn empty_logs_give_a_zeroed_report() {
        let r = aggregate(&[run(1, &[], vec![])], Band::MinMax).unwrap();
        let c = &r.cells[0];
        assert_eq!(c.final_sem, vec![0]);
        assert_eq!(c.series.len(), 1);
        assert_eq!(c.series[0].total_mean, 0.0);
    }

    #[test]
    fn exec_time_uses_the_first_record_counting_the_execution() {
        let s = vec![stats(0.0, 0), stats(1.0, 0), stats(2.0, 0)];
        // execs 1, 11, 21
        assert_eq!(exec_time(&s, 0), 0.0);
        assert_eq!(exec_time(&s, 5), 1.0);
        assert_eq!(exec_time(&s, 10), 1.0);
        assert_eq!(exec_time(&s, 11), 2.0);
    }
}
