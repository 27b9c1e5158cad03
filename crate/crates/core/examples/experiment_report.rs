//! Paired repetitions of all three engines, aggregated into reliability,
//! mean time to find, and a coverage series.
//!
//! `cargo run --release --example experiment_report -- [minixml|miniscript] [seconds] [reps]`

use std::time::Duration;
use zest::engine::Budget;
use zest::experiment::{default_generator_for, render_table, run_experiment, ExperimentConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let target = args.next().unwrap_or_else(|| "minixml".into());
    let secs: u64 = args.next().map_or(5, |s| s.parse().expect("seconds"));
    let reps: usize = args.next().map_or(3, |s| s.parse().expect("repetitions"));

    let out = std::env::temp_dir().join(format!("zest-experiment-{target}"));
    let mut config = ExperimentConfig::new(&target, default_generator_for(&target).expect("known target"), &out);
    config.budget = Budget::Duration(Duration::from_secs(secs));
    config.repetitions = reps;
    let outcome = run_experiment(&config).expect("experiment runs");

    print!("{}", render_table(&outcome.report));
    println!("\nlog-derived report matches: {}", outcome.consistent());
    println!("coverage.csv and report.json are in {}", out.display());
}
