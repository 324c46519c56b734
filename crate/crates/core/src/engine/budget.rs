//! Exact evaluation of the search-time bound
//! `Σ_i (t_i + t'_i) · 2^(c·i + Σ_{k<=i} (l(f_k) + l(f'_k)))`.

use num_bigint::BigUint;
use serde::Serialize;

use super::dovetail::FeatureStep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BudgetStep {
    pub t_f: u64,
    pub t_fprime: u64,
    pub f_len: usize,
    pub fprime_len: usize,
}

impl From<&FeatureStep> for BudgetStep {
    fn from(s: &FeatureStep) -> Self {
        Self { t_f: s.t_f, t_fprime: s.t_fprime, f_len: s.f_len(), fprime_len: s.fprime_len() }
    }
}

/// Steps are 1-indexed in the exponent's `c·i` term.
pub fn predicted_budget(steps: &[BudgetStep], c: u64) -> BigUint {
    let mut total = BigUint::from(0u32);
    let mut lens: u64 = 0;
    for (i, s) in steps.iter().enumerate() {
        lens += (s.f_len + s.fprime_len) as u64;
        let exp = c * (i as u64 + 1) + lens;
        let t = BigUint::from(s.t_f) + BigUint::from(s.t_fprime);
        total += t << exp;
    }
    total
}
