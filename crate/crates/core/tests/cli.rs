use std::path::Path;
use std::process::{Command, Output};

fn zest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zest")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_args<'a>(out: &'a str, engine: &'a str) -> Vec<&'a str> {
    vec![
        "run", "--engine", engine, "--target", "minixml", "--budget", "3000execs", "--seed", "42", "--out", out,
    ]
}

#[test]
fn cgf_without_seed_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = zest(&run_args(dir.path().to_str().unwrap(), "cgf"));
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_names_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let mut args = run_args(d, "zest");
    args.extend(["--generator", "yaml"]);
    assert_eq!(code(&zest(&args)), 2);
    let mut args = run_args(d, "afl");
    args.extend(["--generator", "xml"]);
    assert_eq!(code(&zest(&args)), 2);
    let args = ["run", "--engine", "zest", "--target", "maven", "--generator", "xml", "--out", d];
    assert_eq!(code(&zest(&args)), 2);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let mut args = run_args(file.to_str().unwrap(), "zest");
    args.extend(["--generator", "xml"]);
    assert_eq!(code(&zest(&args)), 3);
}

fn assert_run_dir(dir: &Path) {
    for f in ["manifest.json", "events.jsonl", "stats.jsonl", "planted_bugs.json", "triage.json", "summary.json"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let corpus: Vec<_> = std::fs::read_dir(dir.join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".bin"))
        .collect();
    assert!(!corpus.is_empty());
    let re = regex::Regex::new(r"^id_\d+_(INITIAL|NEW_TOTAL_COVERAGE|NEW_VALID_COVERAGE)\.bin$").unwrap();
    assert!(corpus.iter().all(|n| re.is_match(n)), "{corpus:?}");
    let stats = std::fs::read_to_string(dir.join("stats.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(stats.lines().next().unwrap()).unwrap();
    for k in ["t", "execs", "valid", "invalid", "failures", "totalCov", "validCov", "semCov", "semRatio"] {
        assert!(first.get(k).is_some(), "stats record lacks {k}");
    }
}

#[test]
fn run_replay_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let mut args = run_args(out_a.to_str().unwrap(), "zest");
    args.extend(["--generator", "xml"]);
    let out = zest(&args);
    assert!([0, 10, 11].contains(&code(&out)), "{}", String::from_utf8_lossy(&out.stderr));
    assert_run_dir(&out_a);

    let out_b = dir.path().join("b");
    let mut args = run_args(out_b.to_str().unwrap(), "zest");
    args.extend(["--generator", "xml"]);
    zest(&args);
    assert_eq!(
        std::fs::read(out_a.join("events.jsonl")).unwrap(),
        std::fs::read(out_b.join("events.jsonl")).unwrap()
    );

    let replayed = zest(&["replay", out_a.to_str().unwrap()]);
    assert_eq!(code(&replayed), 0, "{}", String::from_utf8_lossy(&replayed.stdout));
    let wrong = zest(&["replay", out_a.to_str().unwrap(), "--generator", "script"]);
    assert_eq!(code(&wrong), 2);
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("mismatch"));

    let report_dir = dir.path().join("report");
    let report = zest(&["report", dir.path().to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert_eq!(code(&report), 0, "{}", String::from_utf8_lossy(&report.stderr));
    assert!(String::from_utf8_lossy(&report.stdout).contains("xml-augment-missing-id"));
    for f in ["report.txt", "coverage.csv", "report.json"] {
        assert!(report_dir.join(f).is_file());
    }
}

#[test]
fn cgf_runs_from_a_seed_file_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("seed.xml"), "<project name=\"p\" />").unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "engine = \"cgf\"\ntarget = \"minixml\"\nbudget = \"2000execs\"\nseed_inputs = [\"seed.xml\"]\noutput = \"run\"\nlog = \"interesting\"\n",
    )
    .unwrap();
    let out = zest(&["run", "--config", dir.path().join("c.toml").to_str().unwrap()]);
    assert!([0, 10, 11].contains(&code(&out)), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    assert_eq!(std::fs::read(run.join("seeds/seed_0")).unwrap(), b"<project name=\"p\" />");
    assert_eq!(code(&zest(&["replay", run.to_str().unwrap()])), 0);
}

#[test]
fn experiment_needs_two_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment", "--target", "minixml", "--reps", "1", "--budget", "100execs", "--out", dir.path().to_str().unwrap(),
    ];
    assert_eq!(code(&zest(&args)), 2);
}
