#[path = "common/conformance.rs"]
mod conformance;

use std::collections::BTreeMap;
use std::time::Instant;

#[test]
fn frozen_cases_match() {
    let cases = conformance::cases();
    let start = Instant::now();
    let failures: Vec<String> = cases
        .iter()
        .filter_map(|c| conformance::check(c).err())
        .collect();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
}

#[test]
fn fixture_coverage() {
    let cases = conformance::cases();
    assert!(cases.len() >= 50);
    let mut per_task: BTreeMap<String, usize> = BTreeMap::new();
    for c in &cases {
        *per_task.entry(c["task"].as_str().unwrap().to_string()).or_default() += 1;
    }
    for t in ["A1", "A2", "A3", "A4", "D1", "D2", "D3", "D4"] {
        assert!(per_task.get(t).copied().unwrap_or(0) >= 6, "{t}: {per_task:?}");
    }
    let rewards: Vec<f64> = cases
        .iter()
        .filter_map(|c| c["expected"]["reward"].as_f64())
        .collect();
    for worked in [0.8167, 0.35, 0.8867, 0.5120, 0.20] {
        assert!(rewards.iter().any(|r| (r - worked).abs() < 5e-5), "{worked}");
    }
    assert!(cases.iter().any(|c| c["expected"]["overlength"] == true
        && c["response"].as_str().unwrap().chars().count() == 201));
}
