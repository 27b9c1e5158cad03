//! Zest, QuickCheck and byte-level CGF on the same target and budget.
//!
//! `cargo run --release --example compare_engines -- [minixml|miniscript] [seconds] [seed]`

use std::time::Duration;
use zest::engine::{
    cgf_campaign, generated_seed, quickcheck_campaign, zest_campaign, Budget, CampaignResult, CampaignSettings,
};
use zest::experiment::default_generator_for;
use zest::gen::generator_by_name;
use zest::targets::target_by_name;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "minixml".into());
    let secs: u64 = args.next().map_or(10, |s| s.parse().expect("seconds"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let target = target_by_name(&name).expect("minixml or miniscript");
    let gen = generator_by_name(default_generator_for(&name).unwrap(), None).unwrap();
    let settings = CampaignSettings::new(Budget::Duration(Duration::from_secs(secs)), seed);
    let seed_input = generated_seed(target.as_ref(), gen.as_ref(), seed).unwrap();
    println!("cgf seed input: {}", String::from_utf8_lossy(&seed_input));

    let runs: [(&str, CampaignResult); 3] = [
        ("zest", zest_campaign(target.as_ref(), gen.as_ref(), &settings, &mut ()).unwrap()),
        ("quickcheck", quickcheck_campaign(target.as_ref(), gen.as_ref(), &settings, &mut ()).unwrap()),
        ("cgf", cgf_campaign(target.as_ref(), &[seed_input], &settings, &mut ()).unwrap()),
    ];
    println!("{:<11} {:>10} {:>8} {:>9} {:>6} {:>6}", "engine", "execs", "valid%", "semantic", "total", "bugs");
    for (engine, r) in &runs {
        let s = &r.stats;
        println!(
            "{engine:<11} {:>10} {:>7.1}% {:>9} {:>6} {:>6}",
            s.execs,
            100.0 * s.valid as f64 / s.execs.max(1) as f64,
            s.sem_cov,
            s.total_cov,
            r.failures.len()
        );
    }
}
