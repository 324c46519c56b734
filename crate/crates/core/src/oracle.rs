//! Exhaustive, step-bounded ground truth.
//!
//! Three searches live here:
//!
//! * over `(f, r)` pairs, ordered by `l(f)+l(r)` then by the bits of `f r`,
//!   for first accepting pairs, shortest features and the bounded
//!   complexity `K̂`;
//! * over autoencoder wires, found by brute-force parsing of every
//!   bitstring, for checking the engine's acceptance order;
//! * a plain one-program search on empty input, the non-incremental
//!   baseline the engine is compared against.
//!
//! Every result carries the caps it was computed under.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{all_of_len, canonical_cmp, BitString};
use crate::engine::enumerate::programs_of_len;
use crate::engine::{Autoencoder, Scheme};
use crate::vm::{count_for_wire_len, run_state, Op, Program, RunOutcome, Status, VmState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleCaps {
    /// Cap on `l(f) + l(r)`.
    pub max_pair_len: usize,
    /// Fuel per run.
    pub step_cap: u64,
    /// Cap on `l(f)`; programs are enumerated up to this length.
    pub max_f_len: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self { max_pair_len: 40, step_cap: 10_000, max_f_len: 17 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairHit {
    pub f: Program,
    pub r: BitString,
}

impl PairHit {
    pub fn len(&self) -> usize {
        self.f.len_bits() + self.r.len()
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            let a = self.f.wire().concat(&self.r);
            let b = other.f.wire().concat(&other.r);
            canonical_cmp(&a, &b)
        })
    }
}

/// Visits a run that has been driven as far as its known prefix allows.
/// Past a halt or fault, extensions of the prefix behave exactly like the
/// prefix itself, so only starved runs are extended.
fn preimage_dfs(state: VmState, x: &BitString, prefix: &mut BitString, max_r_len: usize, cap: u64, out: &mut Vec<BitString>) {
    match state.status() {
        Status::Halted if state.output() == x => out.push(prefix.clone()),
        Status::NeedInput if x.starts_with(state.output()) => {
            let mut closed = state.clone();
            closed.close_input().expect("starved");
            if closed.run(cap - closed.steps_used()) == Status::Halted && closed.output() == x {
                out.push(prefix.clone());
            }
            if prefix.len() >= max_r_len {
                return;
            }
            for bit in [false, true] {
                let mut child = state.clone();
                child.feed(&[bit]).expect("starved");
                child.run(cap - child.steps_used());
                prefix.push(bit);
                preimage_dfs(child, x, prefix, max_r_len, cap, out);
                prefix.pop();
            }
        }
        _ => {}
    }
}

/// Residuals `r` with `l(r) <= max_r_len` and `f(r) = x` within `cap`
/// steps, in canonical order. Extensions of a residual the program never
/// reads to the end of are omitted.
pub fn preimages(f: &Program, x: &BitString, max_r_len: usize, cap: u64) -> Vec<BitString> {
    let mut root = VmState::new_open(Arc::new(f.clone()), Arc::new(BitString::new())).with_output_limit(x.len());
    root.run(cap);
    let mut out = Vec::new();
    preimage_dfs(root, x, &mut BitString::new(), max_r_len, cap, &mut out);
    out.sort_by(|a, b| canonical_cmp(a, b));
    out
}

/// The canonically first residual, by deepening the search one bit at a
/// time so the work stays bounded by the answer's length.
pub fn shortest_preimage(f: &Program, x: &BitString, max_r_len: usize, cap: u64) -> Option<BitString> {
    (0..=max_r_len).find_map(|d| preimages(f, x, d, cap).into_iter().next())
}

fn programs_up_to(max_len: usize) -> Vec<Program> {
    (1..=max_len).filter(|&l| count_for_wire_len(l).is_some()).flat_map(programs_of_len).collect()
}

/// The canonically first pair with `l(f) + l(r) <= limit` satisfying
/// `keep`. Programs go shortest first, and each one's residual search is cut
/// to the best total found so far.
fn first_pair<F>(x: &BitString, caps: &OracleCaps, limit: usize, keep: F) -> Option<PairHit>
where
    F: Fn(&Program, &BitString) -> bool,
{
    let mut best: Option<PairHit> = None;
    for f in programs_up_to(caps.max_f_len.min(limit)) {
        let bound = best.as_ref().map_or(limit, PairHit::len);
        let Some(room) = bound.checked_sub(f.len_bits()) else {
            break;
        };
        // Canonical order puts the shortest residual first.
        let Some(r) = preimages(&f, x, room, caps.step_cap).into_iter().find(|r| keep(&f, r)) else {
            continue;
        };
        let hit = PairHit { f, r };
        if best.as_ref().is_none_or(|b| hit.cmp_key(b) == Ordering::Less) {
            best = Some(hit);
        }
    }
    best
}

fn pair_limit(x: &BitString, caps: &OracleCaps) -> Option<usize> {
    let limit = caps.max_pair_len.min(x.len().checked_sub(1)?);
    Some(limit)
}

/// The canonically first `(f, r)` with `f(r) = x` accepted under `scheme`.
pub fn first_accepting_pair(x: &BitString, caps: &OracleCaps, scheme: Scheme) -> Option<PairHit> {
    let limit = pair_limit(x, caps)?;
    first_pair(x, caps, limit, |f, r| scheme.length_ok(f.len_bits(), r.len(), x.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShortestFeatures {
    pub len: Option<usize>,
    pub features: Vec<Program>,
    pub caps: OracleCaps,
}

/// All accepted features of minimal wire length within caps.
pub fn shortest_bounded_features(x: &BitString, caps: &OracleCaps, scheme: Scheme) -> ShortestFeatures {
    let Some(limit) = pair_limit(x, caps) else {
        return ShortestFeatures { len: None, features: Vec::new(), caps: *caps };
    };
    let keep = |f: &Program, r: &BitString| scheme.length_ok(f.len_bits(), r.len(), x.len());
    for lf in (1..=caps.max_f_len.min(limit)).filter(|&l| count_for_wire_len(l).is_some()) {
        let room = limit - lf;
        let features: Vec<Program> = programs_of_len(lf)
            .into_par_iter()
            .filter(|f| preimages(f, x, room, caps.step_cap).iter().any(|r| keep(f, r)))
            .collect();
        if !features.is_empty() {
            return ShortestFeatures { len: Some(lf), features, caps: *caps };
        }
    }
    ShortestFeatures { len: None, features: Vec::new(), caps: *caps }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityEstimate {
    pub value: usize,
    /// None when nothing within caps printed `x`; `value` is then
    /// `l([CR]) + l(x)`, the pair that copies `x`. No pair any caps admit is
    /// longer, so the estimate only falls as caps grow.
    pub witness: Option<PairHit>,
    pub caps: OracleCaps,
}

impl ComplexityEstimate {
    pub fn found(&self) -> bool {
        self.witness.is_some()
    }
}

/// `K̂(x)`: the least `l(f) + l(r)` with `f(r) = x`, `r = ε` allowed.
pub fn bounded_complexity(x: &BitString, caps: &OracleCaps) -> ComplexityEstimate {
    match first_pair(x, caps, caps.max_pair_len, |_, _| true) {
        Some(hit) => ComplexityEstimate { value: hit.len(), witness: Some(hit), caps: *caps },
        None => ComplexityEstimate { value: Program::from_ops(&[Op::Cr]).len_bits() + x.len(), witness: None, caps: *caps },
    }
}

/// Every parseable autoencoder wire up to `max_a_len`, found by parsing all
/// bitstrings, in length-then-lex order.
#[derive(Debug, Clone)]
pub struct AutoencoderUniverse {
    pub max_a_len: usize,
    pub list: Vec<Autoencoder>,
}

impl AutoencoderUniverse {
    pub fn brute_force(max_a_len: usize) -> Self {
        let list = (0..=max_a_len).flat_map(all_of_len).filter_map(|s| Autoencoder::parse(&s).ok()).collect();
        Self { max_a_len, list }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutoencoderHit {
    pub a_wire: BitString,
    pub f: Program,
    pub r: BitString,
    pub t_f: u64,
    pub t_fprime: u64,
    /// First phase whose cumulative allotment `2^(n-l(a)+1) - 1` covers
    /// `t_f + t_fprime`.
    pub phase: u32,
}

fn completion_phase(len: usize, steps: u64) -> u32 {
    let mut n = len;
    while n + 1 - len < 64 && (1u64 << (n + 1 - len)) - 1 < steps {
        n += 1;
    }
    n as u32
}

/// Runs `f'` on `x` then `f` on the result, sharing `cap` steps.
fn run_pair(a: &Autoencoder, x: &BitString, cap: u64) -> Option<(BitString, BitString, u64, u64)> {
    let (r, t_fprime) = match run_state(VmState::new(Arc::clone(a.fprime()), Arc::new(x.clone())), cap) {
        RunOutcome::Halted { output, steps } => (output, steps),
        _ => return None,
    };
    match run_state(VmState::new(Arc::clone(a.f()), Arc::new(r.clone())), cap - t_fprime) {
        RunOutcome::Halted { output, steps } => Some((output, r, steps, t_fprime)),
        _ => None,
    }
}

/// The autoencoder a phase-by-phase scheduler must accept first: least
/// completion phase, then shortest wire, then lex.
pub fn first_accepting_autoencoder(
    universe: &AutoencoderUniverse,
    x: &BitString,
    step_cap: u64,
    scheme: Scheme,
) -> Option<AutoencoderHit> {
    universe
        .list
        .iter()
        .filter_map(|a| {
            let (y, r, t_f, t_fprime) = run_pair(a, x, step_cap)?;
            if y != *x || !scheme.length_ok(a.f().len_bits(), r.len(), x.len()) {
                return None;
            }
            let phase = completion_phase(a.len_bits(), t_f + t_fprime);
            Some(AutoencoderHit { a_wire: a.wire().clone(), f: Program::clone(a.f()), r, t_f, t_fprime, phase })
        })
        .min_by(|p, q| {
            p.phase.cmp(&q.phase).then_with(|| canonical_cmp(&p.a_wire, &q.a_wire))
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LevinOutcome {
    Found { program: Program, steps: u64 },
    /// The budget ran out first; the true cost exceeds `steps`.
    NotFound { steps: u64 },
}

struct LevinLayer {
    len: usize,
    ops: usize,
    live: BTreeMap<u64, VmState>,
}

fn program_from_code(code: u64, ops: usize) -> Program {
    let ops: Vec<Op> = (0..ops).rev().map(|i| Op::from_nibble(((code >> (4 * i)) & 0xF) as u8)).collect();
    Program::from_ops(&ops)
}

/// Non-incremental search: dovetail every program of wire length at most
/// `max_len` on empty input, phase by phase, until one prints `x`. Programs
/// are generated lazily, so only the budget bounds the work.
pub fn single_program_search(x: &BitString, max_len: usize, budget: u64) -> LevinOutcome {
    let empty = Arc::new(BitString::new());
    let lengths: Vec<(usize, usize)> =
        (1..=max_len).filter_map(|l| count_for_wire_len(l).map(|k| (l, k))).filter(|&(_, k)| k <= 15).collect();
    let mut layers: Vec<LevinLayer> = Vec::new();
    let mut used = 0u64;
    let mut phase = 1usize;
    loop {
        for layer in layers.iter_mut() {
            let slice = 1u64.checked_shl((phase - layer.len) as u32).unwrap_or(u64::MAX);
            let mut finished = Vec::new();
            for (&code, vm) in layer.live.iter_mut() {
                let grant = slice.min(budget - used);
                let before = vm.steps_used();
                let status = vm.run(grant);
                used += vm.steps_used() - before;
                match status {
                    Status::Halted if vm.output() == x => {
                        return LevinOutcome::Found { program: program_from_code(code, layer.ops), steps: used };
                    }
                    Status::Running => {}
                    _ => finished.push(code),
                }
                if used == budget {
                    return LevinOutcome::NotFound { steps: used };
                }
            }
            for code in finished {
                layer.live.remove(&code);
            }
        }
        // Programs of length `phase` join now, one pass in code order.
        if let Some(&(len, ops)) = lengths.get(layers.len()).filter(|&&(len, _)| len == phase) {
            let mut layer = LevinLayer { len, ops, live: BTreeMap::new() };
            for code in 0..1u64 << (4 * ops) {
                let program = program_from_code(code, ops);
                let mut vm = VmState::new(Arc::new(program), Arc::clone(&empty)).with_output_limit(x.len());
                let before = used;
                let status = vm.run(1.min(budget - used));
                used += vm.steps_used();
                debug_assert!(used - before <= 1);
                match status {
                    Status::Halted if vm.output() == x => {
                        return LevinOutcome::Found { program: program_from_code(code, ops), steps: used };
                    }
                    Status::Running => {
                        layer.live.insert(code, vm);
                    }
                    _ => {}
                }
                if used == budget {
                    return LevinOutcome::NotFound { steps: used };
                }
            }
            layers.push(layer);
        }
        if layers.len() == lengths.len() && layers.iter().all(|l| l.live.is_empty()) {
            return LevinOutcome::NotFound { steps: used };
        }
        phase += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::encode_nat;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn preimages_of_copy_and_rld() {
        let cr = Program::from_asm("CR").unwrap();
        assert_eq!(preimages(&cr, &b("0110"), 6, 100), vec![b("0110")]);
        let rld = Program::from_asm("RLD").unwrap();
        let x = BitString::repeat(true, 5).concat(&BitString::repeat(false, 3));
        let r = BitString::from(vec![true]).concat(&encode_nat(5)).concat(&encode_nat(3));
        assert!(preimages(&rld, &x, r.len(), 100).contains(&r));
    }

    #[test]
    fn two_bit_string_has_no_accepting_pair() {
        assert_eq!(first_accepting_pair(&b("01"), &OracleCaps::default(), Scheme::Plain), None);
        assert_eq!(first_accepting_pair(&b(""), &OracleCaps::default(), Scheme::Plain), None);
    }

    #[test]
    fn empty_string_complexity_is_one() {
        let k = bounded_complexity(&BitString::new(), &OracleCaps::default());
        assert_eq!(k.value, 1);
        assert_eq!(k.witness.unwrap().f, Program::empty());
    }

    #[test]
    fn completion_phases() {
        assert_eq!(completion_phase(14, 0), 14);
        assert_eq!(completion_phase(14, 1), 14);
        assert_eq!(completion_phase(14, 2), 15);
        assert_eq!(completion_phase(14, 3), 15);
        assert_eq!(completion_phase(14, 4), 16);
    }

    #[test]
    fn levin_finds_a_constant_printer() {
        // [W1 W1 W1] is 17 bits; the search must print "111" by then.
        match single_program_search(&b("111"), 17, 1 << 20) {
            LevinOutcome::Found { program, .. } => assert!(program.len_bits() <= 17),
            other => panic!("{other:?}"),
        }
        assert!(matches!(single_program_search(&b("111"), 17, 3), LevinOutcome::NotFound { steps: 3 }));
    }
}
