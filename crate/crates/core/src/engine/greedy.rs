//! Greedy search: compress `x` with the first accepted autoencoder, restart
//! on the residual, repeat until the budget runs out.

use serde::Serialize;

use crate::bits::BitString;

use super::dovetail::{DovetailStats, Dovetailer, FeatureStep, Poll, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    BudgetExhausted,
    /// The last search finished every node up to `max_a_len` without an
    /// acceptance.
    SearchExhausted,
    /// The early-termination scheme judged the residual short enough.
    EarlyTermination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreedyResult {
    /// Outermost first.
    pub features: Vec<FeatureStep>,
    pub residual: BitString,
    /// One entry per search, the unsuccessful last one included.
    pub searches: Vec<DovetailStats>,
    pub steps_used: u64,
    pub stop: StopReason,
}

pub fn greedy_alice(x: &BitString, config: &SearchConfig) -> GreedyResult {
    let mut features = Vec::new();
    let mut searches = Vec::new();
    let mut current = x.clone();
    let mut used = 0u64;
    let stop = loop {
        if config.scheme.stops_early(current.len()) {
            break StopReason::EarlyTermination;
        }
        let mut d = Dovetailer::new(current.clone(), config);
        let poll = d.run(config.budget - used);
        used += d.total_steps();
        searches.push(d.stats());
        match poll {
            Poll::Found(step) => {
                debug_assert!(step.f_len() + step.r.len() < current.len());
                current = step.r.clone();
                features.push(step);
            }
            Poll::Paused => break StopReason::BudgetExhausted,
            Poll::Exhausted => break StopReason::SearchExhausted,
        }
    };
    GreedyResult { features, residual: current, searches, steps_used: used, stop }
}
