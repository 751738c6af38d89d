use std::time::{Duration, Instant};

use randlab_core::suite::{run_criterion, DEFAULT_SEED};

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for id in 1..=10u8 {
        let start = Instant::now();
        let r = run_criterion(id, DEFAULT_SEED).expect("criterion ids run 1..=10");
        let elapsed = start.elapsed();
        let mut passed = r.passed;
        let mut detail = r.detail.clone();
        if id == 1 && elapsed > Duration::from_secs(60) {
            passed = false;
            detail.push_str(&format!("; runtime {elapsed:?} exceeds 60 s"));
        }
        println!(
            "{} criterion {:>2}: {} ({} checks, {} failures, {:.1?}) {}",
            if passed { "PASS" } else { "FAIL" },
            id,
            r.name,
            r.checks,
            r.failures,
            elapsed,
            detail
        );
        if !passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
