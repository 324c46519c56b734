//! The compression driver and its JSON report.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bits::BitString;
use crate::descriptor::{encode_description, Description, DescriptorError, DEFAULT_DECODE_FUEL};
use crate::engine::{alice, greedy_alice, predicted_budget, BudgetStep, DovetailStats, FeatureStep, Scheme, SearchConfig, StopReason};
use crate::oracle::{single_program_search, LevinOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Greedy,
    Alice,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Alice => "alice",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "alice" => Ok(Algorithm::Alice),
            _ => Err(format!("unknown algorithm {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepReport {
    pub f_len: usize,
    pub fprime_len: usize,
    pub r_len: usize,
    pub parent_len: usize,
    pub t_f: u64,
    pub t_fprime: u64,
    pub phase: u32,
}

impl From<&FeatureStep> for StepReport {
    fn from(s: &FeatureStep) -> Self {
        Self {
            f_len: s.f_len(),
            fprime_len: s.fprime_len(),
            r_len: s.r.len(),
            parent_len: s.parent_len,
            t_f: s.t_f,
            t_fprime: s.t_fprime,
            phase: s.phase_found,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompressionReport {
    pub input_bits: usize,
    pub algorithm: Algorithm,
    pub scheme: Scheme,
    pub budget_granted: u64,
    pub budget_used: u64,
    pub max_a_len: usize,
    pub stop: StopReason,
    /// Number of features in the emitted description.
    pub s: usize,
    pub steps: Vec<StepReport>,
    pub wire_len: usize,
    pub incompressible: bool,
    /// "compressed" or "incompressible under budget".
    pub verdict: &'static str,
    /// Descriptions the search produced, the emitted one included.
    pub candidates: usize,
    /// One entry per dovetail search (greedy) or the root search (recursive).
    pub scheduler: Vec<DovetailStats>,
    pub predicted_c: u64,
    /// Decimal; can exceed 64 bits.
    pub predicted_budget: String,
}

#[derive(Debug, Clone)]
pub struct Compressed {
    pub description: Description,
    pub path: Vec<FeatureStep>,
    pub report: CompressionReport,
}

/// Best of the candidate feature paths and the trivial description; the
/// first found wins ties.
fn best_of(x: &BitString, paths: Vec<Vec<FeatureStep>>) -> Result<(Description, Vec<FeatureStep>, usize), DescriptorError> {
    let mut best = (Description::trivial(x), Vec::new());
    let candidates = paths.len();
    for path in paths {
        let d = encode_description(x, &path, DEFAULT_DECODE_FUEL)?;
        if d.len_bits() < best.0.len_bits() {
            best = (d, path);
        }
    }
    Ok((best.0, best.1, candidates))
}

pub fn compress(x: &BitString, algorithm: Algorithm, config: &SearchConfig, c: u64) -> Result<Compressed, DescriptorError> {
    let (paths, used, stop, scheduler) = match algorithm {
        Algorithm::Greedy => {
            let g = greedy_alice(x, config);
            // Every prefix of the greedy chain is itself a description.
            let paths = (1..=g.features.len()).map(|k| g.features[..k].to_vec()).collect();
            (paths, g.steps_used, g.stop, g.searches)
        }
        Algorithm::Alice => {
            let a = alice(x, config);
            (a.finds.into_iter().map(|f| f.path).collect(), a.stats.total_steps, a.stop, vec![a.stats.root])
        }
    };
    let (description, path, candidates) = best_of(x, paths)?;
    let budget_steps: Vec<BudgetStep> = path.iter().map(BudgetStep::from).collect();
    let report = CompressionReport {
        input_bits: x.len(),
        algorithm,
        scheme: config.scheme,
        budget_granted: config.budget,
        budget_used: used,
        max_a_len: config.max_a_len,
        stop,
        s: description.s(),
        steps: path.iter().map(StepReport::from).collect(),
        wire_len: description.len_bits(),
        incompressible: path.is_empty(),
        verdict: if path.is_empty() { "incompressible under budget" } else { "compressed" },
        candidates,
        scheduler,
        predicted_c: c,
        predicted_budget: predicted_budget(&budget_steps, c).to_string(),
    };
    Ok(Compressed { description, path, report })
}

/// Framing of a one-feature description with an empty residual:
/// `E2(nat_to_bits(1))` plus `E2(ε)`.
const ONE_PROGRAM_FRAMING: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpeedComparison {
    pub input_bits: usize,
    pub description_bits: usize,
    pub s: usize,
    /// W-steps up to the end of the search that found the last feature.
    pub engine_steps: u64,
    /// Steps the single-program search ran. When it found nothing, its true
    /// cost is larger than this.
    pub baseline_steps: u64,
    pub baseline_found: bool,
}

impl SpeedComparison {
    /// The engine reached a compressing description in fewer W-steps than
    /// the single-program search needs for one at least as short.
    pub fn incremental_wins(&self) -> bool {
        let cheaper = if self.baseline_found {
            self.engine_steps < self.baseline_steps
        } else {
            self.engine_steps <= self.baseline_steps
        };
        self.s > 0 && self.description_bits < self.input_bits && cheaper
    }
}

/// Runs the greedy engine on `x`, then gives a single-program search on
/// empty input `baseline_factor` times the engine's steps to print `x` from
/// a description no longer than the engine's.
pub fn compare_speed(x: &BitString, config: &SearchConfig, baseline_factor: u64) -> Result<SpeedComparison, DescriptorError> {
    let g = greedy_alice(x, config);
    let d = encode_description(x, &g.features, DEFAULT_DECODE_FUEL)?;
    let engine_steps: u64 = g.searches[..g.features.len()].iter().map(|s| s.total_steps).sum();
    let budget = baseline_factor.saturating_mul(engine_steps.max(1));
    let max_len = d.len_bits().saturating_sub(ONE_PROGRAM_FRAMING);
    let (baseline_steps, baseline_found) = match single_program_search(x, max_len, budget) {
        LevinOutcome::Found { steps, .. } => (steps, true),
        LevinOutcome::NotFound { steps } => (steps, false),
    };
    Ok(SpeedComparison {
        input_bits: x.len(),
        description_bits: d.len_bits(),
        s: d.s(),
        engine_steps,
        baseline_steps,
        baseline_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::rle_example;

    #[test]
    fn zero_budget_is_trivial() {
        let x = rle_example();
        let out = compress(&x, Algorithm::Greedy, &SearchConfig::default().with_budget(0), 1).unwrap();
        assert!(out.report.incompressible);
        assert_eq!(out.report.verdict, "incompressible under budget");
        assert_eq!(out.description, Description::trivial(&x));
        assert_eq!(out.report.predicted_budget, "0");
    }

    #[test]
    fn rle_report() {
        let x = rle_example();
        let config = SearchConfig::default().with_budget(200_000);
        let out = compress(&x, Algorithm::Greedy, &config, 1).unwrap();
        assert_eq!(out.report.wire_len, 47);
        assert_eq!(out.report.s, 1);
        assert_eq!(out.description.decode(100).unwrap(), x);
        // (1 + 1) · 2^(1 + 14)
        assert_eq!(out.report.predicted_budget, "65536");
        let json = serde_json::to_value(&out.report).unwrap();
        assert_eq!(json["scheme"], "plain");
        assert_eq!(json["algorithm"], "greedy");
    }

    #[test]
    fn speed_direction_on_a_two_layer_string() {
        let x = crate::corpus::two_layer(30, 3);
        let cmp = compare_speed(&x, &SearchConfig::default().with_budget(1_000_000), 10).unwrap();
        assert!(cmp.incremental_wins(), "{cmp:?}");
    }
}
