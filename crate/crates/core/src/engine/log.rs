//! Per-execution event records, stats records, and campaign observers.

use super::corpus::{CorpusEntry, FailureEntry};
use crate::outcome::{FailureKey, RunResult};
use serde::{Deserialize, Serialize};
use std::io;

/// One line of the event log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecEvent {
    pub exec_index: u64,
    pub parent_id: Option<u64>,
    pub result: RunResult,
    /// Points this run added to total coverage.
    pub new_total: Vec<u32>,
    /// Points this run added to valid coverage.
    pub new_valid: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_key: Option<FailureKey>,
}

impl ExecEvent {
    /// Added coverage or failed.
    pub fn is_interesting(&self) -> bool {
        !self.new_total.is_empty() || !self.new_valid.is_empty() || self.failure_key.is_some()
    }
}

/// A snapshot of campaign counters; also one line of the stats stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignStats {
    /// Seconds since the campaign started.
    pub t: f64,
    pub execs: u64,
    pub valid: u64,
    pub invalid: u64,
    pub failures: u64,
    pub total_cov: usize,
    pub valid_cov: usize,
    /// Semantic-region points in total coverage.
    pub sem_cov: usize,
    /// `sem_cov` over the target's declared semantic points.
    pub sem_ratio: f64,
    pub corpus: usize,
    pub unique_failures: usize,
}

/// Receives campaign artifacts as they are produced.
pub trait Observer {
    fn on_event(&mut self, _event: &ExecEvent) -> io::Result<()> {
        Ok(())
    }

    fn on_stats(&mut self, _stats: &CampaignStats) -> io::Result<()> {
        Ok(())
    }

    fn on_save(&mut self, _entry: &CorpusEntry) -> io::Result<()> {
        Ok(())
    }

    fn on_failure(&mut self, _failure: &FailureEntry) -> io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
impl Observer for () {}

/// Keeps events and stats in memory.
#[derive(Clone, Debug, Default)]
pub struct Recording {
    pub events: Vec<ExecEvent>,
    pub stats: Vec<CampaignStats>,
}

impl Observer for Recording {
    fn on_event(&mut self, event: &ExecEvent) -> io::Result<()> {
        self.events.push(event.clone());
        Ok(())
    }

    fn on_stats(&mut self, stats: &CampaignStats) -> io::Result<()> {
        self.stats.push(stats.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_json_shape() {
        let e = ExecEvent {
            exec_index: 3,
            parent_id: Some(0),
            result: RunResult::Invalid,
            new_total: vec![5, 9],
            new_valid: vec![],
            failure_key: None,
        };
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(
            json,
            r#"{"execIndex":3,"parentId":0,"result":"INVALID","newTotal":[5,9],"newValid":[]}"#
        );
        assert_eq!(serde_json::from_str::<ExecEvent>(&json).unwrap(), e);
    }

    #[test]
    fn stats_json_field_names() {
        let json = serde_json::to_value(CampaignStats::default()).unwrap();
        for field in ["t", "execs", "valid", "invalid", "failures", "totalCov", "validCov", "semCov", "semRatio"] {
            assert!(json.get(field).is_some(), "{field}");
        }
    }
}
