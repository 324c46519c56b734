//! Phase-by-phase dovetailing over autoencoder wires.
//!
//! In phase `i` every node `a` with `l(a) <= i` gets `2^(i-l(a))` fresh
//! W-steps, resumed from where it stopped, in length-then-lex order of `a`.
//! After a completed phase `n` a node that is still running has therefore
//! been granted exactly `2^(n-l(a)+1) - 1` steps.
//!
//! The same scheduler drives both searches. In greedy mode the first
//! accepting node ends the search. In recursive mode an accepting node turns
//! into a child search on its residual, and the remainder of every slice it
//! is granted afterwards is forwarded to that child.

use std::sync::Arc;

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::vm::Program;

use super::enumerate::{autoencoders_of_len, count_autoencoders_of_len, theta, A_MIN_LEN, MAX_A_LEN_LIMIT};
use super::scheme::{accepts, Scheme};
use super::w::{Autoencoder, WRun, WStatus};

pub const DEFAULT_MAX_A_LEN: usize = 22;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchConfig {
    /// Total W-step budget `T_I`.
    pub budget: u64,
    pub scheme: Scheme,
    /// Autoencoders longer than this are never scheduled.
    pub max_a_len: usize,
    /// Optional per-node W-step cap; a node that reaches it without halting
    /// is retired.
    pub node_step_cap: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, scheme: Scheme::Plain, max_a_len: DEFAULT_MAX_A_LEN, node_step_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("max_a_len {0} is below the shortest autoencoder ({A_MIN_LEN} bits)")]
    MaxALenTooSmall(usize),
    #[error("max_a_len {0} exceeds the enumeration limit {MAX_A_LEN_LIMIT}")]
    MaxALenTooLarge(usize),
}

impl SearchConfig {
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_max_a_len(mut self, max_a_len: usize) -> Self {
        self.max_a_len = max_a_len;
        self
    }

    pub fn with_node_step_cap(mut self, cap: Option<u64>) -> Self {
        self.node_step_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_a_len < A_MIN_LEN {
            return Err(ConfigError::MaxALenTooSmall(self.max_a_len));
        }
        if self.max_a_len > MAX_A_LEN_LIMIT {
            return Err(ConfigError::MaxALenTooLarge(self.max_a_len));
        }
        Ok(())
    }
}

/// One accepted autoencoder: `f(r) = x` with the compression condition met.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureStep {
    pub a_wire: BitString,
    pub f: Program,
    pub r: BitString,
    pub t_f: u64,
    pub t_fprime: u64,
    pub phase_found: u32,
    /// Length of the string this step compressed.
    pub parent_len: usize,
}

impl FeatureStep {
    pub fn f_len(&self) -> usize {
        self.f.len_bits()
    }

    pub fn fprime_len(&self) -> usize {
        self.a_wire.len() - self.f.len_bits()
    }
}

fn ser_ratio<S: Serializer>(r: &Ratio<u128>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseRecord {
    pub phase: u32,
    /// Cumulative W-steps at the end of the phase.
    pub total_steps: u64,
    /// `Σ 2^-l(a)` over scheduled lengths `l(a) <= phase`.
    #[serde(serialize_with = "ser_ratio")]
    pub theta: Ratio<u128>,
    pub live_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DovetailStats {
    /// Last completed phase, 0 if none.
    pub last_phase: u32,
    pub total_steps: u64,
    pub l_a_min: usize,
    pub max_a_len: usize,
    pub phases: Vec<PhaseRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Live,
    Accepted,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeRecord {
    pub a_wire: BitString,
    pub kind: NodeKind,
    /// Steps granted by the schedule.
    pub allotted: u64,
    /// Steps actually executed, child searches included.
    pub executed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("phase {phase}: node {a_wire} allotted {allotted}, expected {expected}")]
pub struct AllotmentViolation {
    pub phase: u32,
    pub a_wire: BitString,
    pub allotted: u64,
    pub expected: u64,
}

/// A find of the recursive search: the feature path from the root string
/// down to the residual, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Find {
    pub path: Vec<FeatureStep>,
}

impl Find {
    pub fn residual(&self) -> &BitString {
        &self.path.last().expect("nonempty path").r
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Poll {
    Found(FeatureStep),
    /// The budget ran out; `run` can be called again.
    Paused,
    /// Every length up to `max_a_len` is scheduled and no node is live.
    Exhausted,
}

#[derive(Debug)]
enum NodeState {
    Live(Box<WRun>),
    Accepted(Box<Dovetailer>),
    Dead,
}

#[derive(Debug)]
struct Node {
    state: NodeState,
    allotted: u64,
    executed: u64,
}

#[derive(Debug)]
struct Layer {
    len: usize,
    codes: Arc<[Autoencoder]>,
    nodes: Vec<Node>,
}

enum Slice {
    Done,
    Paused(u64),
    Found(FeatureStep),
}

fn slice_len(phase: u32, len: usize) -> u64 {
    let shift = phase as usize - len;
    if shift >= 64 {
        u64::MAX
    } else {
        1u64 << shift
    }
}

/// `2^(n-l+1) - 1`, saturating.
pub fn cumulative_allotment(phase: u32, len: usize) -> u64 {
    let shift = phase as usize + 1 - len;
    if shift >= 64 {
        u64::MAX
    } else {
        (1u64 << shift) - 1
    }
}

#[derive(Debug)]
pub struct Dovetailer {
    x: Arc<BitString>,
    scheme: Scheme,
    max_a_len: usize,
    node_step_cap: Option<u64>,
    recursive: bool,
    path: Vec<FeatureStep>,
    lengths: Vec<usize>,
    layers: Vec<Layer>,
    phase: u32,
    layer_pos: usize,
    node_pos: usize,
    slice_left: Option<u64>,
    live: usize,
    total_steps: u64,
    phases: Vec<PhaseRecord>,
    exhausted: bool,
}

impl Dovetailer {
    /// A greedy-mode search: the first acceptance is returned.
    pub fn new(x: BitString, config: &SearchConfig) -> Self {
        Self::build(Arc::new(x), config, false, Vec::new())
    }

    /// A recursive-mode search: acceptances spawn child searches.
    pub fn recursive(x: BitString, config: &SearchConfig) -> Self {
        Self::build(Arc::new(x), config, true, Vec::new())
    }

    fn build(x: Arc<BitString>, config: &SearchConfig, recursive: bool, path: Vec<FeatureStep>) -> Self {
        let max_a_len = config.max_a_len.min(MAX_A_LEN_LIMIT);
        let lengths = (A_MIN_LEN..=max_a_len).filter(|&l| count_autoencoders_of_len(l) > 0).collect();
        Self {
            x,
            scheme: config.scheme,
            max_a_len,
            node_step_cap: config.node_step_cap,
            recursive,
            path,
            lengths,
            layers: Vec::new(),
            phase: 1,
            layer_pos: 0,
            node_pos: 0,
            slice_left: None,
            live: 0,
            total_steps: 0,
            phases: Vec::new(),
            exhausted: false,
        }
    }

    pub fn x(&self) -> &BitString {
        &self.x
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn live_nodes(&self) -> usize {
        self.live
    }

    /// True between phases: every node scheduled so far has received its
    /// full allotment.
    pub fn at_phase_boundary(&self) -> bool {
        self.layer_pos == 0 && self.node_pos == 0 && self.slice_left.is_none()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn stats(&self) -> DovetailStats {
        DovetailStats {
            last_phase: self.phases.last().map_or(0, |p| p.phase),
            total_steps: self.total_steps,
            l_a_min: A_MIN_LEN,
            max_a_len: self.max_a_len,
            phases: self.phases.clone(),
        }
    }

    /// Per-node allotments in schedule order.
    pub fn node_table(&self) -> Vec<NodeRecord> {
        self.layers
            .iter()
            .flat_map(|layer| {
                layer.codes.iter().zip(&layer.nodes).map(|(a, n)| NodeRecord {
                    a_wire: a.wire().clone(),
                    kind: match n.state {
                        NodeState::Live(_) => NodeKind::Live,
                        NodeState::Accepted(_) => NodeKind::Accepted,
                        NodeState::Dead => NodeKind::Dead,
                    },
                    allotted: n.allotted,
                    executed: n.executed,
                })
            })
            .collect()
    }

    /// Checks the cumulative allotment of every live node and the bound
    /// `T <= 2^(n+1)`. Only meaningful at a phase boundary.
    pub fn check_allotments(&self) -> Result<(), AllotmentViolation> {
        let Some(n) = self.phases.last().map(|p| p.phase) else {
            return Ok(());
        };
        for layer in self.layers.iter().filter(|l| l.len <= n as usize) {
            let expected = cumulative_allotment(n, layer.len);
            for (a, node) in layer.codes.iter().zip(&layer.nodes) {
                let live = matches!(node.state, NodeState::Live(_) | NodeState::Accepted(_));
                if live && (node.allotted != expected || node.executed != expected) {
                    return Err(AllotmentViolation { phase: n, a_wire: a.wire().clone(), allotted: node.allotted, expected });
                }
            }
        }
        let bound = 1u128 << (n + 1).min(127);
        if self.total_steps as u128 > bound {
            return Err(AllotmentViolation {
                phase: n,
                a_wire: BitString::new(),
                allotted: self.total_steps,
                expected: bound.min(u64::MAX as u128) as u64,
            });
        }
        Ok(())
    }

    /// Runs until an acceptance (greedy mode), until `budget` further W-steps
    /// have been executed, or until the space is exhausted.
    pub fn run(&mut self, budget: u64) -> Poll {
        let mut finds = Vec::new();
        let mut left = budget;
        self.drive(&mut left, &mut finds, false)
    }

    /// Recursive mode: like `run`, collecting the finds made on the way.
    pub fn run_collect(&mut self, budget: u64, finds: &mut Vec<Find>) -> Poll {
        let mut left = budget;
        self.drive(&mut left, finds, false)
    }

    /// Runs to the end of the current phase with no budget limit.
    pub fn run_phase(&mut self, finds: &mut Vec<Find>) -> Poll {
        let mut left = u64::MAX;
        self.drive(&mut left, finds, true)
    }

    fn materialize(&mut self) {
        while self.layers.len() < self.lengths.len() && self.lengths[self.layers.len()] <= self.phase as usize {
            let len = self.lengths[self.layers.len()];
            let codes = autoencoders_of_len(len);
            let nodes: Vec<Node> = codes
                .iter()
                .map(|a| Node {
                    state: NodeState::Live(Box::new(
                        WRun::new(Arc::clone(&self.x), a).with_step_cap(self.node_step_cap),
                    )),
                    allotted: 0,
                    executed: 0,
                })
                .collect();
            self.live += nodes.len();
            self.layers.push(Layer { len, codes, nodes });
        }
    }

    fn drive(&mut self, left: &mut u64, finds: &mut Vec<Find>, one_phase: bool) -> Poll {
        loop {
            if self.exhausted {
                return Poll::Exhausted;
            }
            if self.at_phase_boundary() {
                self.materialize();
            }
            while self.layer_pos < self.layers.len() && self.layers[self.layer_pos].len <= self.phase as usize {
                while self.node_pos < self.layers[self.layer_pos].nodes.len() {
                    let (li, ni) = (self.layer_pos, self.node_pos);
                    if matches!(self.layers[li].nodes[ni].state, NodeState::Dead) {
                        self.node_pos += 1;
                        continue;
                    }
                    let fuel = match self.slice_left.take() {
                        Some(rest) => rest,
                        None => {
                            if *left == 0 {
                                return Poll::Paused;
                            }
                            let s = slice_len(self.phase, self.layers[li].len);
                            let node = &mut self.layers[li].nodes[ni];
                            node.allotted = node.allotted.saturating_add(s);
                            s
                        }
                    };
                    match self.work(li, ni, fuel, left, finds) {
                        Slice::Done => self.node_pos += 1,
                        Slice::Paused(rest) => {
                            self.slice_left = Some(rest);
                            return Poll::Paused;
                        }
                        Slice::Found(step) => {
                            self.node_pos += 1;
                            return Poll::Found(step);
                        }
                    }
                }
                self.layer_pos += 1;
                self.node_pos = 0;
            }
            self.phases.push(PhaseRecord {
                phase: self.phase,
                total_steps: self.total_steps,
                theta: theta(self.max_a_len.min(self.phase as usize)),
                live_nodes: self.live,
            });
            self.phase += 1;
            self.layer_pos = 0;
            self.node_pos = 0;
            if self.layers.len() == self.lengths.len() && self.live == 0 {
                self.exhausted = true;
            }
            if one_phase {
                return if self.exhausted { Poll::Exhausted } else { Poll::Paused };
            }
        }
    }

    fn work(&mut self, li: usize, ni: usize, mut fuel: u64, left: &mut u64, finds: &mut Vec<Find>) -> Slice {
        let mut state = std::mem::replace(&mut self.layers[li].nodes[ni].state, NodeState::Dead);
        let outcome = loop {
            match state {
                NodeState::Live(mut run) => {
                    let used = run.advance(fuel.min(*left));
                    self.charge(li, ni, used, &mut fuel, left);
                    match run.status() {
                        WStatus::Running => {
                            state = NodeState::Live(run);
                            break if fuel == 0 { Slice::Done } else { Slice::Paused(fuel) };
                        }
                        WStatus::Failed(_) => {
                            self.live -= 1;
                            state = NodeState::Dead;
                            break Slice::Done;
                        }
                        WStatus::Halted => {
                            let a = &self.layers[li].codes[ni];
                            let out = run.into_output().expect("halted");
                            if !accepts(&self.x, &out.y, a.f(), &out.r, self.scheme) {
                                self.live -= 1;
                                state = NodeState::Dead;
                                break Slice::Done;
                            }
                            let step = FeatureStep {
                                a_wire: a.wire().clone(),
                                f: Program::clone(a.f()),
                                r: BitString::clone(&out.r),
                                t_f: out.t_f,
                                t_fprime: out.t_fprime,
                                phase_found: self.phase,
                                parent_len: self.x.len(),
                            };
                            if !self.recursive {
                                self.live -= 1;
                                state = NodeState::Dead;
                                break Slice::Found(step);
                            }
                            let mut path = self.path.clone();
                            path.push(step);
                            finds.push(Find { path: path.clone() });
                            let config = SearchConfig {
                                budget: 0,
                                scheme: self.scheme,
                                max_a_len: self.max_a_len,
                                node_step_cap: self.node_step_cap,
                            };
                            state = NodeState::Accepted(Box::new(Dovetailer::build(out.r, &config, true, path)));
                        }
                    }
                }
                NodeState::Accepted(mut child) => {
                    let before = child.total_steps;
                    let mut grant = fuel.min(*left);
                    let poll = child.drive(&mut grant, finds, false);
                    let used = child.total_steps - before;
                    self.charge(li, ni, used, &mut fuel, left);
                    match poll {
                        Poll::Exhausted => {
                            self.live -= 1;
                            state = NodeState::Dead;
                            break Slice::Done;
                        }
                        Poll::Paused => {
                            state = NodeState::Accepted(child);
                            break if fuel == 0 { Slice::Done } else { Slice::Paused(fuel) };
                        }
                        Poll::Found(_) => unreachable!("child searches are recursive"),
                    }
                }
                NodeState::Dead => break Slice::Done,
            }
        };
        self.layers[li].nodes[ni].state = state;
        outcome
    }

    fn charge(&mut self, li: usize, ni: usize, used: u64, fuel: &mut u64, left: &mut u64) {
        self.layers[li].nodes[ni].executed += used;
        self.total_steps += used;
        *fuel -= used;
        *left -= used;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SearchOutcome {
    Found(FeatureStep),
    BudgetExhausted,
    SpaceExhausted,
}

/// One greedy search on `x` with at most `budget` W-steps.
pub fn dovetail_search(x: &BitString, config: &SearchConfig, budget: u64) -> (SearchOutcome, DovetailStats) {
    let mut d = Dovetailer::new(x.clone(), config);
    let outcome = match d.run(budget) {
        Poll::Found(step) => SearchOutcome::Found(step),
        Poll::Paused => SearchOutcome::BudgetExhausted,
        Poll::Exhausted => SearchOutcome::SpaceExhausted,
    };
    (outcome, d.stats())
}
