#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use zest::engine::{CampaignResult, EngineKind, ExecEvent, SaveReason};
use zest::outcome::RunResult;

/// State rebuilt from an event log alone.
#[derive(Debug, Default)]
pub struct Rebuilt {
    pub total: BTreeSet<u32>,
    pub valid: BTreeSet<u32>,
    pub corpus: BTreeMap<u64, SaveReason>,
    /// Valid runs that added only valid coverage.
    pub valid_only_saves: usize,
}

/// Replay the save rules over a full event log, checking at every step that
/// the logged additions were new, that valid coverage stays inside total
/// coverage, and that failures add nothing.
pub fn rebuild(engine: EngineKind, events: &[ExecEvent]) -> Result<Rebuilt, String> {
    let mut r = Rebuilt::default();
    let mut initial_done = false;
    for (i, e) in events.iter().enumerate() {
        if e.exec_index != i as u64 {
            return Err(format!("event {i} has index {}", e.exec_index));
        }
        if e.result == RunResult::Failure {
            if !e.new_total.is_empty() || !e.new_valid.is_empty() || e.failure_key.is_none() {
                return Err(format!("failure {i} changed coverage or lacks a key"));
            }
            continue;
        }
        if e.result != RunResult::Valid && !e.new_valid.is_empty() {
            return Err(format!("non-valid run {i} added valid coverage"));
        }
        for id in &e.new_total {
            if !r.total.insert(*id) {
                return Err(format!("run {i} re-added total point {id}"));
            }
        }
        for id in &e.new_valid {
            if !r.valid.insert(*id) {
                return Err(format!("run {i} re-added valid point {id}"));
            }
        }
        if !r.valid.is_subset(&r.total) {
            return Err(format!("valid coverage escaped total coverage at {i}"));
        }
        let reason = if !initial_done && e.parent_id.is_none() && engine != EngineKind::QuickCheck {
            initial_done = engine == EngineKind::Zest;
            Some(SaveReason::Initial)
        } else {
            match engine {
                EngineKind::QuickCheck => None,
                EngineKind::Cgf => (!e.new_total.is_empty()).then_some(SaveReason::NewTotalCoverage),
                EngineKind::Zest => {
                    if !e.new_valid.is_empty() {
                        if e.new_total.is_empty() {
                            r.valid_only_saves += 1;
                        }
                        Some(SaveReason::NewValidCoverage)
                    } else if !e.new_total.is_empty() {
                        Some(SaveReason::NewTotalCoverage)
                    } else {
                        None
                    }
                }
            }
        };
        if let Some(reason) = reason {
            r.corpus.insert(e.exec_index, reason);
        }
    }
    Ok(r)
}

/// Compare a rebuilt state with what the engine reported.
pub fn matches_engine(rebuilt: &Rebuilt, result: &CampaignResult) -> Result<(), String> {
    let total: BTreeSet<u32> = result.total_coverage.ids().iter().copied().collect();
    let valid: BTreeSet<u32> = result.valid_coverage.ids().iter().copied().collect();
    if rebuilt.total != total {
        return Err(format!("total coverage: log {} vs engine {}", rebuilt.total.len(), total.len()));
    }
    if rebuilt.valid != valid {
        return Err(format!("valid coverage: log {} vs engine {}", rebuilt.valid.len(), valid.len()));
    }
    let corpus: BTreeMap<u64, SaveReason> = result.corpus.iter().map(|e| (e.id, e.reason)).collect();
    if rebuilt.corpus != corpus {
        return Err(format!("corpus: log {} entries vs engine {}", rebuilt.corpus.len(), corpus.len()));
    }
    let mut union = BTreeSet::new();
    for e in &result.corpus {
        union.extend(e.coverage.ids().iter().copied());
    }
    if union != total {
        return Err("saved entries do not account for total coverage".into());
    }
    Ok(())
}
