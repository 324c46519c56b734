//! The machine `W`: given `x` and an autoencoder `a = f'f` it computes
//! `r := f'(x)` and then `y := f(r)`, charging every opcode of both runs to a
//! single resumable step counter.
//!
//! Comparing `y` with `x` and handing `r` from one run to the next are free.

use std::sync::Arc;

use serde::Serialize;

use crate::bits::BitString;
use crate::vm::{parse_program, Fault, Program, Status, VmError, VmState};

/// `a = f'f`: a descriptive map followed by a feature, as one wire.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Autoencoder {
    wire: BitString,
    fprime: Arc<Program>,
    f: Arc<Program>,
}

impl Autoencoder {
    pub fn new(fprime: Program, f: Program) -> Self {
        Self::from_arcs(Arc::new(fprime), Arc::new(f))
    }

    pub fn from_arcs(fprime: Arc<Program>, f: Arc<Program>) -> Self {
        let wire = fprime.wire().concat(f.wire());
        Self { wire, fprime, f }
    }

    /// Splits a wire into exactly two programs.
    pub fn parse(wire: &[bool]) -> Result<Self, VmError> {
        let (fprime, rest) = parse_program(wire)?;
        let (f, rest) = parse_program(rest)?;
        if !rest.is_empty() {
            return Err(VmError::MalformedProgram("trailing bits after autoencoder"));
        }
        Ok(Self { wire: BitString::from(wire), fprime: Arc::new(fprime), f: Arc::new(f) })
    }

    pub fn wire(&self) -> &BitString {
        &self.wire
    }

    pub fn len_bits(&self) -> usize {
        self.wire.len()
    }

    pub fn fprime(&self) -> &Arc<Program> {
        &self.fprime
    }

    pub fn f(&self) -> &Arc<Program> {
        &self.f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WFailure {
    /// `f'` faulted.
    Encode(Fault),
    /// `f` faulted.
    Decode(Fault),
    /// The per-node step cap ran out before `W` halted.
    StepCap,
}

/// A halted `W` run: `<y, r, f>` plus the two step counts.
#[derive(Debug, Clone)]
pub struct WOutput {
    pub y: BitString,
    pub r: Arc<BitString>,
    /// Steps of `f(r)`.
    pub t_f: u64,
    /// Steps of `f'(x)`.
    pub t_fprime: u64,
}

#[derive(Debug, Clone)]
enum Stage {
    Encode(VmState),
    Decode { r: Arc<BitString>, vm: VmState },
    Halted(WOutput),
    Failed(WFailure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WStatus {
    Running,
    Halted,
    Failed(WFailure),
}

/// A resumable run of `W(<x, a>)`.
#[derive(Debug, Clone)]
pub struct WRun {
    f: Arc<Program>,
    x_len: usize,
    stage: Stage,
    t_fprime: u64,
    t_f: u64,
    step_cap: Option<u64>,
}

impl WRun {
    pub fn new(x: Arc<BitString>, a: &Autoencoder) -> Self {
        let x_len = x.len();
        // r longer than x can never satisfy the compression condition, and y
        // longer than x can never equal it.
        let vm = VmState::new(Arc::clone(&a.fprime), x).with_output_limit(x_len);
        let mut run =
            Self { f: Arc::clone(&a.f), x_len, stage: Stage::Encode(vm), t_fprime: 0, t_f: 0, step_cap: None };
        run.settle();
        run
    }

    pub fn with_step_cap(mut self, cap: Option<u64>) -> Self {
        self.step_cap = cap;
        self.check_cap();
        self
    }

    /// Total W-steps so far: `t_f + t_f'`.
    pub fn steps(&self) -> u64 {
        self.t_f + self.t_fprime
    }

    pub fn status(&self) -> WStatus {
        match &self.stage {
            Stage::Encode(_) | Stage::Decode { .. } => WStatus::Running,
            Stage::Halted(_) => WStatus::Halted,
            Stage::Failed(e) => WStatus::Failed(*e),
        }
    }

    pub fn output(&self) -> Option<&WOutput> {
        match &self.stage {
            Stage::Halted(out) => Some(out),
            _ => None,
        }
    }

    pub fn into_output(self) -> Option<WOutput> {
        match self.stage {
            Stage::Halted(out) => Some(out),
            _ => None,
        }
    }

    /// Zero-cost transitions: `f'` halted → start `f`; `f` halted → done.
    fn settle(&mut self) {
        loop {
            let next = match &mut self.stage {
                Stage::Encode(vm) => match vm.status() {
                    Status::Running => return,
                    Status::Halted => {
                        let r = Arc::new(vm.output().clone());
                        let vm = VmState::new(Arc::clone(&self.f), Arc::clone(&r)).with_output_limit(self.x_len);
                        Stage::Decode { r, vm }
                    }
                    Status::Failed(fault) => Stage::Failed(WFailure::Encode(fault)),
                    Status::NeedInput => unreachable!("closed input"),
                },
                Stage::Decode { r, vm } => match vm.status() {
                    Status::Running => return,
                    Status::Halted => Stage::Halted(WOutput {
                        y: vm.output().clone(),
                        r: Arc::clone(r),
                        t_f: self.t_f,
                        t_fprime: self.t_fprime,
                    }),
                    Status::Failed(fault) => Stage::Failed(WFailure::Decode(fault)),
                    Status::NeedInput => unreachable!("closed input"),
                },
                Stage::Halted(_) | Stage::Failed(_) => return,
            };
            self.stage = next;
        }
    }

    fn check_cap(&mut self) {
        if let Some(cap) = self.step_cap {
            if self.status() == WStatus::Running && self.steps() >= cap {
                self.stage = Stage::Failed(WFailure::StepCap);
            }
        }
    }

    /// Runs up to `fuel` W-steps and returns how many were executed.
    pub fn advance(&mut self, fuel: u64) -> u64 {
        let mut fuel = fuel;
        if let Some(cap) = self.step_cap {
            fuel = fuel.min(cap.saturating_sub(self.steps()));
        }
        let mut used = 0;
        while used < fuel {
            let (vm, counter) = match &mut self.stage {
                Stage::Encode(vm) => (vm, &mut self.t_fprime),
                Stage::Decode { vm, .. } => (vm, &mut self.t_f),
                _ => break,
            };
            let before = vm.steps_used();
            vm.run(fuel - used);
            let delta = vm.steps_used() - before;
            *counter += delta;
            used += delta;
            self.settle();
        }
        self.check_cap();
        used
    }
}

#[derive(Debug, Clone)]
pub enum WOutcome {
    Halted(WOutput),
    Failed { failure: WFailure, steps: u64 },
    OutOfFuel(Box<WRun>),
}

/// Runs `W(<x, a>)` for at most `fuel` steps.
pub fn run_w(x: &BitString, a: &Autoencoder, fuel: u64) -> WOutcome {
    let mut run = WRun::new(Arc::new(x.clone()), a);
    run.advance(fuel);
    finish(run)
}

/// Continues a suspended `W` run.
pub fn resume_w(mut run: WRun, fuel: u64) -> WOutcome {
    run.advance(fuel);
    finish(run)
}

fn finish(run: WRun) -> WOutcome {
    let steps = run.steps();
    match run.status() {
        WStatus::Running => WOutcome::OutOfFuel(Box::new(run)),
        WStatus::Failed(failure) => WOutcome::Failed { failure, steps },
        WStatus::Halted => WOutcome::Halted(run.into_output().expect("halted")),
    }
}
