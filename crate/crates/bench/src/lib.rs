//! Workloads shared by the benchmarks.

use alice_core::bits::BitString;
use alice_core::corpus;
use alice_core::engine::{dovetail_search, SearchConfig, SearchOutcome};

/// Named inputs, smallest first.
pub fn inputs() -> Vec<(&'static str, BitString)> {
    vec![
        ("ones_then_zeros_40_20", corpus::ones_then_zeros(40, 20)),
        ("two_layer_30_3", corpus::two_layer(30, 3)),
        ("rle_200_50", corpus::rle_example()),
    ]
}

/// W-steps one greedy search spends before its first acceptance, or the
/// whole budget.
pub fn steps_to_first_find(x: &BitString, budget: u64) -> (bool, u64) {
    let (outcome, stats) = dovetail_search(x, &SearchConfig::default(), budget);
    (matches!(outcome, SearchOutcome::Found(_)), stats.total_steps)
}
