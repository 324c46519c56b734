//! Incremental lossless compression by dovetailed search for autoencoder
//! pairs `(f', f)` over the IC-1 prefix machine.

pub mod bits;
pub mod corpus;
pub mod descriptor;
pub mod engine;
pub mod mltest;
pub mod oracle;
pub mod report;
pub mod vm;

pub use bits::{BitString, CodecError};
pub use vm::{Fault, Op, Program, RunOutcome, VmError, VmState};
pub use descriptor::{decode_description, encode_description, Description, DescriptorError};
pub use engine::{
    alice, dovetail_search, greedy_alice, predicted_budget, Autoencoder, DovetailStats, FeatureStep, Scheme,
    SearchConfig, SearchOutcome,
};
pub use report::{compare_speed, compress, Algorithm, CompressionReport, SpeedComparison};
