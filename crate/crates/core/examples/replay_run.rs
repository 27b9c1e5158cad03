//! Write a campaign to disk, then replay every saved entry from the files.

use zest::engine::{Budget, EngineKind};
use zest::experiment::{replay_run, run_campaign, CampaignConfig};

fn main() {
    let dir = std::env::temp_dir().join("zest-replay-example");
    let mut config = CampaignConfig::new(EngineKind::Zest, "miniscript", Some("script"), &dir);
    config.budget = Budget::Executions(20_000);
    config.seed = 3;
    let (_, run) = run_campaign(&config).expect("campaign runs");
    println!(
        "{} corpus entries and {} failures written to {}",
        run.result.corpus.len(),
        run.result.failures.len(),
        dir.display()
    );

    let report = replay_run(&dir, None).expect("run directory is readable");
    println!(
        "replayed {} + {} entries, {} mismatches",
        report.corpus_checked,
        report.failures_checked,
        report.mismatches.len()
    );

    match replay_run(&dir, Some("xml")) {
        Err(e) => println!("replaying with the wrong generator: {e}"),
        Ok(_) => unreachable!("generator mismatch must be refused"),
    }
}
