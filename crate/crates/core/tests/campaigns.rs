mod common;

use std::collections::BTreeSet;
use zest::engine::{
    cgf_campaign, generated_seed, quickcheck_campaign, replay, zest_campaign, Budget, CampaignSettings, EngineKind,
    Recording,
};
use zest::gen::{generator_by_name, Generator};
use zest::outcome::RunResult;
use zest::targets::{target_by_name, Target};

fn pair(target: &str) -> (Box<dyn Target>, Box<dyn Generator>) {
    let gen = if target == "minixml" { "xml" } else { "script" };
    (target_by_name(target).unwrap(), generator_by_name(gen, None).unwrap())
}

fn settings(execs: u64, seed: u64) -> CampaignSettings {
    CampaignSettings::new(Budget::Executions(execs), seed)
}

#[test]
fn zest_log_rebuilds_engine_state() {
    for name in ["minixml", "miniscript"] {
        let (target, gen) = pair(name);
        let mut rec = Recording::default();
        let result = zest_campaign(target.as_ref(), gen.as_ref(), &settings(4_000, 3), &mut rec).unwrap();
        assert_eq!(rec.events.len(), 4_000);
        let rebuilt = common::rebuild(EngineKind::Zest, &rec.events).unwrap();
        common::matches_engine(&rebuilt, &result).unwrap();
    }
}

#[test]
fn valid_runs_adding_only_valid_coverage_are_saved() {
    let (target, gen) = pair("minixml");
    let mut rec = Recording::default();
    let result = zest_campaign(target.as_ref(), gen.as_ref(), &settings(4_000, 5), &mut rec).unwrap();
    let rebuilt = common::rebuild(EngineKind::Zest, &rec.events).unwrap();
    assert!(rebuilt.valid_only_saves > 0, "no run added only valid coverage");
    for e in rec.events.iter().filter(|e| e.new_total.is_empty() && !e.new_valid.is_empty()) {
        let entry = result.corpus.iter().find(|c| c.id == e.exec_index).unwrap();
        assert_eq!(entry.reason, zest::engine::SaveReason::NewValidCoverage);
    }
}

#[test]
fn failures_are_never_saved_for_mutation() {
    let (target, gen) = pair("miniscript");
    let mut rec = Recording::default();
    let result = zest_campaign(target.as_ref(), gen.as_ref(), &settings(6_000, 1), &mut rec).unwrap();
    let failing: BTreeSet<u64> = rec
        .events
        .iter()
        .filter(|e| e.result == RunResult::Failure)
        .map(|e| e.exec_index)
        .collect();
    assert!(result.corpus.iter().all(|e| !failing.contains(&e.id)));
    assert!(result.corpus.iter().all(|e| e.result != RunResult::Failure));
    for f in &result.failures {
        assert!(failing.contains(&f.exec_index));
    }
}

#[test]
fn cgf_and_quickcheck_logs_rebuild_engine_state() {
    for name in ["minixml", "miniscript"] {
        let (target, gen) = pair(name);
        let seed = generated_seed(target.as_ref(), gen.as_ref(), 9).unwrap();
        let mut rec = Recording::default();
        let result = cgf_campaign(target.as_ref(), &[seed], &settings(3_000, 9), &mut rec).unwrap();
        common::matches_engine(&common::rebuild(EngineKind::Cgf, &rec.events).unwrap(), &result).unwrap();

        let mut rec = Recording::default();
        let result = quickcheck_campaign(target.as_ref(), gen.as_ref(), &settings(3_000, 9), &mut rec).unwrap();
        let rebuilt = common::rebuild(EngineKind::QuickCheck, &rec.events).unwrap();
        assert!(result.corpus.is_empty());
        assert_eq!(rebuilt.total.len(), result.total_coverage.len());
    }
}

#[test]
fn campaigns_are_deterministic_in_executions() {
    let (target, gen) = pair("minixml");
    let run = || {
        let mut rec = Recording::default();
        let s = settings(3_000, 11).with_virtual_clock(250);
        let r = zest_campaign(target.as_ref(), gen.as_ref(), &s, &mut rec).unwrap();
        (rec, r.corpus.ids(), r.failures.iter().map(|f| f.key.clone()).collect::<Vec<_>>())
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0.events, b.0.events);
    assert_eq!(a.0.stats, b.0.stats);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
}

#[test]
fn quickcheck_stats_stream_is_reproducible_with_a_virtual_clock() {
    let (target, gen) = pair("miniscript");
    let run = || {
        let mut rec = Recording::default();
        let s = settings(5_000, 2).with_virtual_clock(1_000);
        quickcheck_campaign(target.as_ref(), gen.as_ref(), &s, &mut rec).unwrap();
        rec.stats
    };
    let stats = run();
    assert_eq!(stats, run());
    // one record per virtual second plus the final one
    assert!(stats.len() >= 5, "{}", stats.len());
    assert!(stats.windows(2).all(|w| w[0].t <= w[1].t && w[0].execs <= w[1].execs));
}

#[test]
fn every_saved_entry_replays_identically() {
    for name in ["minixml", "miniscript"] {
        let (target, gen) = pair(name);
        let result = zest_campaign(target.as_ref(), gen.as_ref(), &settings(5_000, 4), &mut ()).unwrap();
        for e in &result.corpus {
            let (input, outcome) = replay(target.as_ref(), Some(gen.as_ref()), &e.data).unwrap();
            assert_eq!(input, e.input, "{name} entry {}", e.id);
            assert_eq!(outcome.result, e.result);
            assert_eq!(outcome.coverage, e.coverage);
        }
        for f in &result.failures {
            let (_, outcome) = replay(target.as_ref(), Some(gen.as_ref()), &f.data).unwrap();
            assert_eq!(outcome.failure.as_ref(), Some(&f.key));
            assert_eq!(outcome.coverage, f.coverage);
        }
    }
}

#[test]
fn random_campaigns_only_find_planted_bugs() {
    for name in ["minixml", "miniscript"] {
        let (target, gen) = pair(name);
        let planted: BTreeSet<_> = target.planted_bugs().into_iter().map(|b| b.key).collect();
        for seed in 0..3 {
            for result in [
                zest_campaign(target.as_ref(), gen.as_ref(), &settings(8_000, seed), &mut ()).unwrap(),
                quickcheck_campaign(target.as_ref(), gen.as_ref(), &settings(8_000, seed), &mut ()).unwrap(),
            ] {
                for key in result.failure_keys() {
                    assert!(planted.contains(key), "{name}: unplanted failure {key}");
                }
            }
        }
    }
}

#[test]
fn zest_is_more_valid_than_cgf() {
    for name in ["minixml", "miniscript"] {
        let (target, gen) = pair(name);
        let z = zest_campaign(target.as_ref(), gen.as_ref(), &settings(10_000, 6), &mut ()).unwrap();
        let seed = generated_seed(target.as_ref(), gen.as_ref(), 6).unwrap();
        let c = cgf_campaign(target.as_ref(), &[seed], &settings(10_000, 6), &mut ()).unwrap();
        let rate = |s: &zest::engine::CampaignStats| s.valid as f64 / s.execs as f64;
        assert!(rate(&z.stats) >= rate(&c.stats), "{name}: zest {} < cgf {}", rate(&z.stats), rate(&c.stats));
    }
}
