//! Randomness tests from features and features from randomness tests.
//!
//! `φ(f, x, t)` is the deficiency `l(x) - l(r) - 1` of the shortest `r` with
//! `f(r) = x` in at most `t` steps and `l(f) + l(r) < l(x)`, or 0. For every
//! feature and every `t` the strings of length `n` with `φ >= m` number at
//! most `2^(n-m)`.
//!
//! In the other direction a test `δ` yields, for each `m`, a map that
//! recovers any `x` with `δ(x) >= m` from its index in the sorted set of
//! such strings, padded to `n - m` bits.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{all_of_len, all_up_to, nat_len, BitString};
use crate::oracle::shortest_preimage;
use crate::vm::{run, Program, RunOutcome};

/// Largest `n` swept exhaustively unless the caller raises it.
pub const DEFAULT_MAX_N: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MlTestError {
    #[error("|V| = {size} exceeds 2^(n-m) = {bound}")]
    NotATest { size: u64, bound: u64 },
    #[error("index {0} out of range")]
    IndexOutOfRange(u64),
    #[error("residual must have {expected} bits, got {got}")]
    BadIndexWidth { expected: usize, got: usize },
    #[error("m must be at least 1")]
    ZeroM,
    #[error("n = {n} above the exhaustive limit {limit}")]
    TooLarge { n: usize, limit: usize },
}

pub fn phi(f: &Program, x: &BitString, t: u64) -> usize {
    let Some(max_r) = x.len().checked_sub(f.len_bits() + 1) else {
        return 0;
    };
    shortest_preimage(f, x, max_r, t).map_or(0, |r| x.len() - r.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaReport {
    pub n: usize,
    pub t: u64,
    pub f_wire: BitString,
    /// `histogram[m]` counts strings with `φ = m`; sums to `2^n`.
    pub histogram: Vec<u64>,
    /// Every `m >= 1` whose tail count exceeds `2^(n-m)`.
    pub violations: Vec<usize>,
}

impl DeltaReport {
    /// Number of strings with `φ >= m`.
    pub fn at_least(&self, m: usize) -> u64 {
        self.histogram.iter().skip(m).sum()
    }
}

/// Best `φ` for every `x` of length `n`, by running `f` forward on every
/// short enough residual.
pub fn phi_table(f: &Program, n: usize, t: u64) -> Vec<usize> {
    let mut best = vec![0usize; 1 << n];
    let Some(max_r) = n.checked_sub(f.len_bits() + 1) else {
        return best;
    };
    let found: Vec<(usize, usize)> = all_up_to(max_r)
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter_map(|r| match run(f, &r, t) {
            RunOutcome::Halted { output, .. } if output.len() == n => {
                let idx = output.to_binary_u64().unwrap_or(0) as usize;
                Some((idx, n - r.len() - 1))
            }
            _ => None,
        })
        .collect();
    for (idx, d) in found {
        best[idx] = best[idx].max(d);
    }
    best
}

pub fn delta_bound_check(f: &Program, n: usize, t: u64) -> Result<DeltaReport, MlTestError> {
    delta_bound_check_capped(f, n, t, DEFAULT_MAX_N)
}

pub fn delta_bound_check_capped(f: &Program, n: usize, t: u64, max_n: usize) -> Result<DeltaReport, MlTestError> {
    if n > max_n || n >= 63 {
        return Err(MlTestError::TooLarge { n, limit: max_n });
    }
    let mut histogram = vec![0u64; n + 1];
    for d in phi_table(f, n, t) {
        histogram[d] += 1;
    }
    let mut report = DeltaReport { n, t, f_wire: f.wire().clone(), histogram, violations: Vec::new() };
    report.violations = (1..=n).filter(|&m| report.at_least(m) > 1u64 << (n - m)).collect();
    Ok(report)
}

/// A total computable test `δ`.
pub trait RandomnessTest {
    fn delta(&self, x: &[bool]) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcreteTest {
    /// Number of leading zeros.
    LeadingZeros,
    /// `max{i : x_1 = x_3 = ... = x_(2i-1) = 1}`.
    OddPositionOnes,
}

impl RandomnessTest for ConcreteTest {
    fn delta(&self, x: &[bool]) -> usize {
        match self {
            ConcreteTest::LeadingZeros => x.iter().take_while(|&&b| !b).count(),
            ConcreteTest::OddPositionOnes => x.iter().step_by(2).take_while(|&&b| b).count(),
        }
    }
}

/// The feature built from a test: a table of `V_m^n` in lex order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HostFeature {
    pub m: usize,
    pub n: usize,
    pub members: Vec<BitString>,
}

impl HostFeature {
    /// `m - 1`; with `l(r) = n - m` the compression condition holds.
    pub fn nominal_len(&self) -> usize {
        self.m - 1
    }

    pub fn index_width(&self) -> usize {
        self.n.saturating_sub(self.m)
    }

    pub fn encode_index(&self, x: &BitString) -> Option<BitString> {
        let idx = self.members.binary_search(x).ok()?;
        BitString::from_binary_u64(idx as u64, self.index_width())
    }

    pub fn decode(&self, r: &BitString) -> Result<BitString, MlTestError> {
        if self.m > self.n {
            return Err(MlTestError::IndexOutOfRange(r.to_binary_u64().unwrap_or(u64::MAX)));
        }
        if r.len() != self.index_width() {
            return Err(MlTestError::BadIndexWidth { expected: self.index_width(), got: r.len() });
        }
        let idx = r.to_binary_u64().unwrap_or(u64::MAX);
        self.members.get(idx as usize).cloned().ok_or(MlTestError::IndexOutOfRange(idx))
    }
}

pub fn test_to_feature(test: &dyn RandomnessTest, m: usize, n: usize) -> Result<HostFeature, MlTestError> {
    if m == 0 {
        return Err(MlTestError::ZeroM);
    }
    if n > 24 {
        return Err(MlTestError::TooLarge { n, limit: 24 });
    }
    // all_of_len yields lex order, which is the sort order of BitString at
    // fixed length.
    let members: Vec<BitString> = all_of_len(n).filter(|x| test.delta(x) >= m).collect();
    let bound = if m > n { 0 } else { 1u64 << (n - m) };
    if members.len() as u64 > bound {
        return Err(MlTestError::NotATest { size: members.len() as u64, bound });
    }
    Ok(HostFeature { m, n, members })
}

/// The leading-zeros feature `[RNB LP W0 EP CR]`: the residual `E1(a) w`
/// rebuilds `0^a w`.
pub fn leading_zeros_program() -> Program {
    Program::from_asm("RNB LP W0 EP CR").expect("valid program")
}

/// The deficiency that feature certifies for `0^a w`: `a - 2 l(a) - 2`.
pub fn leading_zeros_bound(a: u64) -> i64 {
    a as i64 - 2 * nat_len(a) as i64 - 2
}
