//! Acceptance gate: runs the ten criteria in sequence and prints one
//! `PASS`/`FAIL` line for each.
//!
//! The criteria run one after another in a single test so that the runtime
//! budgets are measured without other tests competing for the CPU.

use coupled_ginibre::validation::{run_criterion, ValidationOptions};
use std::io::Write;

#[test]
fn acceptance_criteria() {
    let opts = ValidationOptions::default();
    let mut failed = Vec::new();
    for id in 1..=10 {
        let report = run_criterion(id, &opts).expect("criterion numbers 1 to 10 exist");
        // Written to the process stdout directly so the lines are visible
        // without `--nocapture`.
        let mut out = std::io::stdout().lock();
        writeln!(out, "{}", report.line()).unwrap();
        out.flush().unwrap();
        if !report.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
