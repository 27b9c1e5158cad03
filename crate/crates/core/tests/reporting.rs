use std::collections::BTreeMap;
use zest::engine::{triage, Budget, EngineKind, ExecEvent};
use zest::experiment::{
    read_json, read_jsonl, report_from_dirs, run_campaign, run_experiment, Band, CampaignConfig, ExperimentConfig,
    LogMode, TriageRecord, EVENTS, MANIFEST, STATS, TRIAGE,
};
use zest::outcome::FailureKey;

fn small_experiment(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("miniscript", "script", out);
    c.repetitions = 2;
    c.budget = Budget::Executions(3_000);
    c.virtual_clock_us = Some(500);
    c.base_seed = 7;
    c.jobs = Some(2);
    c
}

#[test]
fn log_report_equals_in_memory_report() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&small_experiment(dir.path())).unwrap();
    assert!(outcome.failed.is_empty(), "{:?}", outcome.failed);
    assert_eq!(outcome.runs.len(), 6);
    assert!(outcome.consistent());
    for engine in EngineKind::ALL {
        let cell = outcome.report.cell("miniscript", engine).unwrap();
        assert_eq!(cell.runs, 2);
        for bug in &cell.bugs {
            assert!((0.0..=1.0).contains(&bug.reliability));
            assert_eq!(bug.mtf.is_some(), bug.reliability > 0.0);
        }
    }
    for f in ["report.txt", "coverage.csv", "report.json"] {
        assert!(dir.path().join(f).is_file());
    }
}

#[test]
fn experiments_are_reproducible_with_a_virtual_clock() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small_experiment(a.path())).unwrap();
    let rb = run_experiment(&small_experiment(b.path())).unwrap();
    assert_eq!(ra.report, rb.report);
    for engine in ["zest", "cgf", "quickcheck"] {
        let p = format!("{engine}/rep_1/{EVENTS}");
        assert_eq!(std::fs::read(a.path().join(&p)).unwrap(), std::fs::read(b.path().join(&p)).unwrap());
    }
}

#[test]
fn logged_triage_matches_engine_triage() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = CampaignConfig::new(EngineKind::QuickCheck, "miniscript", Some("script"), dir.path());
    c.budget = Budget::Executions(20_000);
    c.virtual_clock_us = Some(100);
    let (_, run) = run_campaign(&c).unwrap();
    assert!(run.failing.len() > run.result.failures.len(), "needs repeated failures");

    let events: Vec<ExecEvent> = read_jsonl(&dir.path().join(EVENTS)).unwrap();
    let stats = read_jsonl(&dir.path().join(STATS)).unwrap();
    let stream = events.iter().filter_map(|e| {
        let key = e.failure_key.clone()?;
        Some((key, zest::experiment::exec_time(&stats, e.exec_index), Vec::<u8>::new()))
    });
    let from_log = triage(stream);
    let written: Vec<TriageRecord> = read_json(&dir.path().join(TRIAGE)).unwrap();
    assert_eq!(written.len(), from_log.len());
    for rec in &written {
        let t = &from_log[&rec.key];
        assert_eq!(t.count, rec.count);
        assert_eq!(t.first_secs, rec.first_secs);
    }
    let engine_firsts: BTreeMap<&FailureKey, f64> =
        run.result.failures.iter().map(|f| (&f.key, f.discovered_secs)).collect();
    for (key, t) in &from_log {
        assert_eq!(engine_firsts[key], t.first_secs);
    }
}

#[test]
fn interesting_logs_give_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (name, log) in [("full", LogMode::Full), ("interesting", LogMode::Interesting)] {
        let mut c = CampaignConfig::new(EngineKind::Zest, "minixml", Some("xml"), dir.path().join(name));
        c.budget = Budget::Executions(4_000);
        c.virtual_clock_us = Some(100);
        c.log = log;
        run_campaign(&c).unwrap();
        reports.push(report_from_dirs(&[dir.path().join(name)], Band::MinMax).unwrap().report);
    }
    assert_eq!(reports[0], reports[1]);
    let full = std::fs::read_to_string(dir.path().join("full").join(EVENTS)).unwrap().lines().count();
    let short = std::fs::read_to_string(dir.path().join("interesting").join(EVENTS)).unwrap().lines().count();
    assert_eq!(full, 4_000);
    assert!(short < full);
}

#[test]
fn corrupt_logs_are_reported_per_directory() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["good", "bad"] {
        let mut c = CampaignConfig::new(EngineKind::QuickCheck, "minixml", Some("xml"), dir.path().join(name));
        c.budget = Budget::Executions(500);
        run_campaign(&c).unwrap();
    }
    let stats = dir.path().join("bad").join(STATS);
    let text = std::fs::read_to_string(&stats).unwrap();
    std::fs::write(&stats, &text[..text.len() / 2]).unwrap();
    let logs = report_from_dirs(&[dir.path().to_path_buf()], Band::MinMax).unwrap();
    assert_eq!(logs.runs.len(), 1);
    assert_eq!(logs.errors.len(), 1);
    assert!(logs.errors[0].0.ends_with("bad"));
}

#[test]
fn empty_logs_give_a_zeroed_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = CampaignConfig::new(EngineKind::QuickCheck, "minixml", Some("xml"), dir.path());
    c.budget = Budget::Executions(10);
    run_campaign(&c).unwrap();
    std::fs::write(dir.path().join(EVENTS), "").unwrap();
    std::fs::write(dir.path().join(STATS), "").unwrap();
    assert!(dir.path().join(MANIFEST).is_file());
    let logs = report_from_dirs(&[dir.path().to_path_buf()], Band::MinMax).unwrap();
    let cell = &logs.report.cells[0];
    assert_eq!(cell.final_sem, vec![0]);
    assert_eq!(cell.final_total, vec![0]);
    assert!(cell.bugs.iter().all(|b| b.reliability == 0.0 && b.mtf.is_none()));
}
