//! The machine `W`, the dovetailing scheduler and the two searches built on
//! it: greedy (one feature at a time) and recursive (a tree of searches).

pub mod alice;
pub mod budget;
pub mod dovetail;
pub mod enumerate;
pub mod greedy;
pub mod scheme;
pub mod w;

pub use alice::{alice, AliceResult, AliceStats};
pub use budget::{predicted_budget, BudgetStep};
pub use dovetail::{
    cumulative_allotment, dovetail_search, AllotmentViolation, ConfigError, DovetailStats, Dovetailer, FeatureStep,
    Find, NodeKind, NodeRecord, PhaseRecord, Poll, SearchConfig, SearchOutcome, DEFAULT_BUDGET, DEFAULT_MAX_A_LEN,
};
pub use enumerate::{autoencoders_of_len, count_autoencoders_of_len, theta, A_MIN_LEN, MAX_A_LEN_LIMIT};
pub use greedy::{greedy_alice, GreedyResult, StopReason};
pub use scheme::{accepts, Scheme, SchemeParseError};
pub use w::{resume_w, run_w, Autoencoder, WFailure, WOutcome, WOutput, WRun, WStatus};
