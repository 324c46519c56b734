//! Recursive search: every accepted node becomes a search on its own
//! residual, and every acceptance anywhere in the tree is a description.

use serde::Serialize;

use crate::bits::BitString;

use super::dovetail::{DovetailStats, Dovetailer, Find, Poll, SearchConfig};
use super::greedy::StopReason;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AliceStats {
    pub total_steps: u64,
    pub root: DovetailStats,
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AliceResult {
    /// In discovery order.
    pub finds: Vec<Find>,
    pub stats: AliceStats,
    pub stop: StopReason,
}

pub fn alice(x: &BitString, config: &SearchConfig) -> AliceResult {
    let mut root = Dovetailer::recursive(x.clone(), config);
    let mut finds = Vec::new();
    let stop = match root.run_collect(config.budget, &mut finds) {
        Poll::Paused => StopReason::BudgetExhausted,
        Poll::Exhausted => StopReason::SearchExhausted,
        Poll::Found(_) => unreachable!("recursive searches report finds through the list"),
    };
    let max_depth = finds.iter().map(|f| f.path.len()).max().unwrap_or(0);
    AliceResult { finds, stats: AliceStats { total_steps: root.total_steps(), root: root.stats(), max_depth }, stop }
}
