//! Acceptance suite: one pass/fail line per check, grouped by criterion.
//!
//! Runs the full desk-scale validation (1000 lattice trials, 10 packing
//! replicas, 25 thermal replicas, the 1e5-particle throughput gate, and the
//! soft 1e6-particle run). Expect a few minutes of wall time; set
//! EXTRACOP_SKIP_LARGE=1 to drop the 1e6-particle soft run.

use extracop::seed::SeedPolicy;
use extracop::validate::{self, ValidationScale};

#[test]
fn acceptance_criteria() {
    let scale = ValidationScale::full();
    let seed = SeedPolicy::new(0);
    let include_million = std::env::var("EXTRACOP_SKIP_LARGE").is_err();
    let results = validate::run_all(&scale, seed, include_million);
    println!("{}", validate::render(&results));
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("criterion {}: {} ({})", r.criterion, r.name, r.detail))
        .collect();
    assert!(
        failed.is_empty(),
        "{} acceptance checks failed:\n{}",
        failed.len(),
        failed.join("\n")
    );
}
