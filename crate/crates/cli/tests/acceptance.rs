//! Runs `verify` twice and reports one line per criterion. The tenth
//! criterion also requires the two runs' artifacts to match byte for byte.

use std::fs;
use std::io::Write;

use bpire::{run, Command, ExperimentConfig};

const SEED: u64 = 1;
const WORKERS: usize = 4;

#[test]
fn acceptance_suite() {
    let cfg = ExperimentConfig { label: Some("verify".into()), seed: SEED, workers: WORKERS, ..Default::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(Command::Verify, &cfg, a.path()).unwrap();
    let second = run(Command::Verify, &cfg, b.path()).unwrap();

    let bytes = |dir: &std::path::Path| fs::read(dir.join("acceptance.json")).unwrap();
    let identical = bytes(a.path()) == bytes(b.path());

    let suite = first.suite.expect("verify returns the suite");
    let mut failures = Vec::new();
    for c in &suite.criteria {
        let mut passed = c.passed;
        let mut note = String::new();
        if c.elapsed > c.time_limit {
            passed = false;
            note = format!(", over the {} s limit", c.time_limit.as_secs());
        }
        if c.id == 10 && !identical {
            passed = false;
            note.push_str(", reruns differ");
        }
        // written to the raw handle so the lines survive libtest's output capture
        let mut out = std::io::stdout().lock();
        writeln!(
            out,
            "criterion {:>2} {}: {} ({:.1} s{note})",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.name,
            c.elapsed.as_secs_f64()
        )
        .unwrap();
        if !passed {
            failures.push(format!("{} {}: {}", c.id, c.name, c.details));
        }
    }
    assert_eq!(second.exit_code, first.exit_code);
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
    assert_eq!(first.exit_code, 0);
}
