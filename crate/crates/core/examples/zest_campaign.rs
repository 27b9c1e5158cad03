//! Run Zest against the build-file target and list what it found.
//!
//! `cargo run --release --example zest_campaign -- [seconds] [seed]`

use std::time::Duration;
use zest::coverage::Region;
use zest::engine::{zest_campaign, Budget, CampaignSettings};
use zest::gen::XmlGenerator;
use zest::targets::{MiniXml, Target};

fn main() {
    let mut args = std::env::args().skip(1);
    let secs: u64 = args.next().map_or(10, |s| s.parse().expect("seconds"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let target = MiniXml::new();
    let settings = CampaignSettings::new(Budget::Duration(Duration::from_secs(secs)), seed);
    let result = zest_campaign(&target, &XmlGenerator::default(), &settings, &mut ()).expect("campaign runs");

    let s = &result.stats;
    println!("{} executions, {:.1}% valid", s.execs, 100.0 * s.valid as f64 / s.execs as f64);
    println!(
        "coverage: {} points, {} semantic of {}",
        s.total_cov,
        result.semantic_coverage(),
        target.layout().total(Region::Semantic)
    );
    println!("corpus: {} entries", result.corpus.len());
    let planted = target.planted_bugs();
    for f in &result.failures {
        let id = planted.iter().find(|b| b.key == f.key).map_or("unplanted", |b| b.id.as_str());
        println!("{:>7.2}s  {id}\n          {}", f.discovered_secs, String::from_utf8_lossy(&f.input));
    }
}
