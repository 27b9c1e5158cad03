//! Plugging in a program of your own: a server config reader built on the
//! bundled XML parser, with coverage probes and a bug to find.

use std::time::Duration;
use zest::coverage::{CoverageLayout, CoverageRecorder};
use zest::engine::{zest_campaign, Budget, CampaignSettings};
use zest::gen::{GeneratorConfig, XmlGenerator};
use zest::targets::xml::parse;
use zest::targets::{PlantedBug, Rejection, Target};

struct ServerConfig;

impl Target for ServerConfig {
    fn name(&self) -> &'static str {
        "serverconfig"
    }

    fn layout(&self) -> CoverageLayout {
        CoverageLayout {
            syntax_sites: 0,
            semantic_sites: 8,
        }
    }

    fn planted_bugs(&self) -> Vec<PlantedBug> {
        Vec::new()
    }

    fn sample_input(&self) -> &'static [u8] {
        b"<server><listen port=\"80\" /></server>"
    }

    fn run(&self, input: &[u8], cov: &mut CoverageRecorder) -> Result<(), Rejection> {
        let root = parse(input, cov)?;
        if cov.sem(0, root.name != "server") {
            return Err(Rejection::semantic("root must be <server>"));
        }
        let mut ports = Vec::new();
        for el in root.elements() {
            if cov.sem(1, el.name == "listen") {
                let port = el.attr("port").ok_or_else(|| Rejection::semantic("listen needs a port"))?;
                let port: u16 = port.parse().map_err(|_| Rejection::semantic("port is not a number"))?;
                cov.sem(2, port < 1024);
                ports.push(port);
            } else if cov.sem(3, el.name == "backend") {
                // the bug: a backend refers to the most recent listener
                let front = ports.last().unwrap();
                cov.sem(4, *front == 80);
            }
        }
        cov.sem(5, ports.len() >= 2);
        Ok(())
    }
}

fn main() {
    let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
    let gen = XmlGenerator::new(GeneratorConfig {
        max_depth: 3,
        max_children: 4,
        max_str_len: 6,
        max_attributes: 1,
        name_pool: owned(&["server", "listen", "backend"]),
        attribute_pool: owned(&["port"]),
        value_pool: owned(&["80", "8080", "443"]),
        keep_structure: false,
    })
    .unwrap();
    let settings = CampaignSettings::new(Budget::Duration(Duration::from_secs(5)), 1);
    let result = zest_campaign(&ServerConfig, &gen, &settings, &mut ()).unwrap();
    println!("{} executions, {} valid, {} semantic points", result.stats.execs, result.stats.valid, result.stats.sem_cov);
    for f in &result.failures {
        println!("{:.2}s {}\n  {}", f.discovered_secs, f.key, String::from_utf8_lossy(&f.input));
    }
}
