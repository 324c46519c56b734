//! IC-1: a small self-delimiting program format and its step-counted,
//! resumable interpreter.
//!
//! A program wire is `E1(nat_to_bits(k))` followed by `k` four-bit opcodes,
//! so the set of valid wires is prefix-free. A program `f` applied to a
//! residual `r` is a run of `f` with `r` as its input; the run halts when the
//! program counter walks off the last opcode.
//!
//! Every executed opcode costs exactly one step, including loop control and
//! the macro opcodes (`CR`, `EV`, `RLE`, `RLD`). Halting itself is free, so
//! the empty program halts after zero steps.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bits::{bits_to_nat, e1_decode, nat_len, nat_to_bits, read_unary, write_e1, BitString};

/// Default cap on the length of a run's output, in bits.
pub const DEFAULT_OUTPUT_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Op {
    /// Append 0.
    W0 = 0x0,
    /// Append 1.
    W1 = 0x1,
    /// Copy one input bit to the output.
    Rb = 0x2,
    /// Read `1^k 0`, set `A := k`.
    Rn = 0x3,
    /// Append `1^A 0`.
    Wn = 0x4,
    /// Read `E1(nat_to_bits(k))`, set `A := k`.
    Rnb = 0x5,
    /// Append `E1(nat_to_bits(A))`.
    Wnb = 0x6,
    /// Loop begin; the repetition count is `A` at entry.
    Lp = 0x7,
    /// Loop end.
    Ep = 0x8,
    /// Copy all remaining input.
    Cr = 0x9,
    Inc = 0xA,
    Dec = 0xB,
    /// Run an `E2`-framed program read from the input.
    Ev = 0xC,
    /// Run-length encode the remaining input.
    Rle = 0xD,
    /// Run-length decode the remaining input.
    Rld = 0xE,
    Reserved = 0xF,
}

impl Op {
    pub const ALL: [Op; 16] = [
        Op::W0,
        Op::W1,
        Op::Rb,
        Op::Rn,
        Op::Wn,
        Op::Rnb,
        Op::Wnb,
        Op::Lp,
        Op::Ep,
        Op::Cr,
        Op::Inc,
        Op::Dec,
        Op::Ev,
        Op::Rle,
        Op::Rld,
        Op::Reserved,
    ];

    pub fn from_nibble(n: u8) -> Op {
        Op::ALL[(n & 0xF) as usize]
    }

    pub fn nibble(self) -> u8 {
        self as u8
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Op::W0 => "W0",
            Op::W1 => "W1",
            Op::Rb => "RB",
            Op::Rn => "RN",
            Op::Wn => "WN",
            Op::Rnb => "RNB",
            Op::Wnb => "WNB",
            Op::Lp => "LP",
            Op::Ep => "EP",
            Op::Cr => "CR",
            Op::Inc => "INC",
            Op::Dec => "DEC",
            Op::Ev => "EV",
            Op::Rle => "RLE",
            Op::Rld => "RLD",
            Op::Reserved => "RSV",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.mnemonic().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("malformed program: {0}")]
    MalformedProgram(&'static str),
    #[error("unknown mnemonic {0:?}")]
    UnknownMnemonic(String),
    #[error("step called on a state that is not running ({0:?})")]
    NotRunning(Status),
}

/// Run-time faults. A faulted run is terminal and produces no output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Fault {
    InputExhausted,
    BadLoop,
    Reserved,
    /// `EV` read a frame that is not exactly one program wire.
    BadProgram,
    /// A number read from the input does not fit in 64 bits.
    Overflow,
    OutputLimit,
}

/// A parsed program. `wire` is the full self-delimiting encoding; `l(f)` is
/// always measured on it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Program {
    wire: BitString,
    ops: Vec<Op>,
    /// Partner index for every `LP`/`EP`, `None` when unmatched.
    partner: Vec<Option<usize>>,
}

impl Program {
    pub fn empty() -> Self {
        Self::from_ops(&[])
    }

    pub fn from_ops(ops: &[Op]) -> Self {
        let mut wire = BitString::with_capacity(wire_len(ops.len()));
        write_e1(&mut wire, &nat_to_bits(ops.len() as u64));
        for op in ops {
            let n = op.nibble();
            for k in (0..4).rev() {
                wire.push((n >> k) & 1 == 1);
            }
        }
        let partner = match_loops(ops);
        Self { wire, ops: ops.to_vec(), partner }
    }

    /// Parses whitespace-separated mnemonics, e.g. `"RN LP W1 EP W0 CR"`.
    pub fn from_asm(src: &str) -> Result<Self, VmError> {
        let ops = src
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| Op::from_mnemonic(t).ok_or_else(|| VmError::UnknownMnemonic(t.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_ops(&ops))
    }

    pub fn wire(&self) -> &BitString {
        &self.wire
    }

    /// `l(f)`: the length of the wire, envelope included.
    pub fn len_bits(&self) -> usize {
        self.wire.len()
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn asm(&self) -> String {
        let v: Vec<_> = self.ops.iter().map(|o| o.mnemonic()).collect();
        format!("[{}]", v.join(" "))
    }

    pub fn is_balanced(&self) -> bool {
        self.ops
            .iter()
            .zip(&self.partner)
            .all(|(op, p)| !matches!(op, Op::Lp | Op::Ep) || p.is_some())
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Program{}", self.asm())
    }
}

impl Serialize for Program {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.wire.serialize(s)
    }
}

/// Wire length of a program with `count` opcodes.
pub fn wire_len(count: usize) -> usize {
    2 * nat_len(count as u64) + 1 + 4 * count
}

/// The opcode count of a program whose wire has exactly `len` bits, if any.
pub fn count_for_wire_len(len: usize) -> Option<usize> {
    (0..=64usize).find_map(|header| {
        let body = len.checked_sub(2 * header + 1)?;
        (body % 4 == 0 && nat_len((body / 4) as u64) == header).then_some(body / 4)
    })
}

fn match_loops(ops: &[Op]) -> Vec<Option<usize>> {
    let mut partner = vec![None; ops.len()];
    let mut open = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        match op {
            Op::Lp => open.push(i),
            Op::Ep => {
                if let Some(j) = open.pop() {
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                }
            }
            _ => {}
        }
    }
    partner
}

/// Consumes exactly one program wire from the front of `stream`.
pub fn parse_program(stream: &[bool]) -> Result<(Program, &[bool]), VmError> {
    let (count_bits, rest) =
        e1_decode(stream).map_err(|_| VmError::MalformedProgram("truncated envelope"))?;
    let count = bits_to_nat(&count_bits).map_err(|_| VmError::MalformedProgram("opcode count overflows"))?;
    if (rest.len() as u64) / 4 < count {
        return Err(VmError::MalformedProgram("truncated body"));
    }
    let count = count as usize;
    let ops: Vec<Op> = rest[..4 * count]
        .chunks_exact(4)
        .map(|c| Op::from_nibble(c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8)))
        .collect();
    let consumed = stream.len() - rest.len() + 4 * count;
    let partner = match_loops(&ops);
    let program = Program { wire: BitString::from(&stream[..consumed]), ops, partner };
    Ok((program, &rest[4 * count..]))
}

/// Parses a stream that must hold exactly one program wire.
pub fn parse_exact(stream: &[bool]) -> Result<Program, VmError> {
    let (p, rest) = parse_program(stream)?;
    if !rest.is_empty() {
        return Err(VmError::MalformedProgram("trailing bits after program"));
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
    Failed(Fault),
    /// Only in open-input mode: the run needs bits beyond the known prefix,
    /// or needs to know where the input ends.
    NeedInput,
}

#[derive(Debug, Clone)]
struct Frame {
    program: Arc<Program>,
    pc: usize,
    acc: u64,
    aux: u64,
    loop_stack: Vec<(usize, u64)>,
}

impl Frame {
    fn new(program: Arc<Program>) -> Self {
        Self { program, pc: 0, acc: 0, aux: 0, loop_stack: Vec::new() }
    }
}

/// A suspended (or finished) run. The innermost `EV` frame is on top of the
/// frame stack; all frames share the input cursor, the output and the step
/// counter.
#[derive(Debug, Clone)]
pub struct VmState {
    frames: Vec<Frame>,
    input: Arc<BitString>,
    cursor: usize,
    input_open: bool,
    output: BitString,
    output_limit: usize,
    steps_used: u64,
    status: Status,
    /// Cursor and output length before the current opcode, so a starved
    /// opcode can be rolled back and retried.
    op_start: (usize, usize),
}

#[derive(Debug, Clone)]
pub enum RunOutcome {
    Halted { output: BitString, steps: u64 },
    Failed { fault: Fault, steps: u64 },
    OutOfFuel(Box<VmState>),
}

impl RunOutcome {
    pub fn halted_output(&self) -> Option<&BitString> {
        match self {
            RunOutcome::Halted { output, .. } => Some(output),
            _ => None,
        }
    }
}

impl VmState {
    pub fn new(program: Arc<Program>, input: Arc<BitString>) -> Self {
        let mut state = Self {
            frames: vec![Frame::new(program)],
            input,
            cursor: 0,
            input_open: false,
            output: BitString::new(),
            output_limit: DEFAULT_OUTPUT_LIMIT,
            steps_used: 0,
            status: Status::Running,
            op_start: (0, 0),
        };
        state.settle();
        state
    }

    /// A run over an input of which only a prefix is known. Any opcode that
    /// would read past the prefix, or observe where the input ends, stops the
    /// run with [`Status::NeedInput`]. Output produced up to that point is a
    /// prefix of the output of every run on an extension of `prefix`.
    pub fn new_open(program: Arc<Program>, prefix: Arc<BitString>) -> Self {
        let mut state = Self::new(program, prefix);
        state.input_open = true;
        state
    }

    /// Undoes the opcode that starved. Reading opcodes touch only the cursor
    /// and the output before they can starve.
    fn rollback(&mut self) -> Result<(), VmError> {
        if self.status != Status::NeedInput {
            return Err(VmError::NotRunning(self.status));
        }
        let (cursor, out_len) = self.op_start;
        self.cursor = cursor;
        self.output.truncate(out_len);
        self.steps_used -= 1;
        self.status = Status::Running;
        Ok(())
    }

    /// Appends `more` to the known prefix of a starved open run. Running on
    /// from here is the same as a fresh open run on the longer prefix.
    pub fn feed(&mut self, more: &[bool]) -> Result<(), VmError> {
        self.rollback()?;
        Arc::make_mut(&mut self.input).extend_from_bits(more);
        Ok(())
    }

    /// Declares that a starved open run's input ends at the known prefix.
    /// Running on from here is the same as a closed run on that prefix.
    pub fn close_input(&mut self) -> Result<(), VmError> {
        self.rollback()?;
        self.input_open = false;
        Ok(())
    }

    pub fn with_output_limit(mut self, limit: usize) -> Self {
        self.output_limit = limit;
        self
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_running(&self) -> bool {
        self.status == Status::Running
    }

    pub fn steps_used(&self) -> u64 {
        self.steps_used
    }

    pub fn output(&self) -> &BitString {
        &self.output
    }

    pub fn into_output(self) -> BitString {
        self.output
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn input(&self) -> &BitString {
        &self.input
    }

    /// The outermost program.
    pub fn program(&self) -> &Program {
        &self.frames[0].program
    }

    /// Number of active frames; greater than one inside `EV`.
    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn pc(&self) -> usize {
        self.top().pc
    }

    pub fn acc(&self) -> u64 {
        self.top().acc
    }

    pub fn aux(&self) -> u64 {
        self.top().aux
    }

    pub fn loop_stack(&self) -> &[(usize, u64)] {
        &self.top().loop_stack
    }

    fn top(&self) -> &Frame {
        self.frames.last().expect("frame stack never empty")
    }

    /// Pops finished `EV` frames and detects the normal halt. Costs no steps.
    fn settle(&mut self) {
        while self.status == Status::Running {
            let top = self.frames.last().expect("frame stack never empty");
            if top.pc < top.program.ops.len() {
                break;
            }
            if self.frames.len() > 1 {
                self.frames.pop();
            } else {
                self.status = Status::Halted;
            }
        }
    }

    /// Executes exactly one opcode.
    pub fn step(&mut self) -> Result<Status, VmError> {
        if self.status != Status::Running {
            return Err(VmError::NotRunning(self.status));
        }
        self.steps_used += 1;
        self.op_start = (self.cursor, self.output.len());
        if let Err(status) = self.exec() {
            self.status = status;
        }
        self.settle();
        Ok(self.status)
    }

    /// Executes up to `fuel` opcodes; stops early on halt or fault.
    pub fn run(&mut self, fuel: u64) -> Status {
        let mut left = fuel;
        while self.status == Status::Running && left > 0 {
            self.step().expect("running");
            left -= 1;
        }
        self.status
    }

    fn starved(&self) -> Status {
        if self.input_open {
            Status::NeedInput
        } else {
            Status::Failed(Fault::InputExhausted)
        }
    }

    fn remaining(&self) -> &[bool] {
        &self.input[self.cursor..]
    }

    fn read_bit(&mut self) -> Result<bool, Status> {
        match self.input.get(self.cursor) {
            Some(&b) => {
                self.cursor += 1;
                Ok(b)
            }
            None => Err(self.starved()),
        }
    }

    /// Reads `1^k 0` and returns `k`.
    fn read_unary(&mut self) -> Result<u64, Status> {
        match read_unary(self.remaining()) {
            Some(k) => {
                self.cursor += k + 1;
                Ok(k as u64)
            }
            None => Err(self.starved()),
        }
    }

    /// Reads `E1(nat_to_bits(n))` and returns `n`.
    fn read_nat(&mut self) -> Result<u64, Status> {
        let rest = self.remaining();
        let k = read_unary(rest).ok_or_else(|| self.starved())?;
        if rest.len() < 2 * k + 1 {
            return Err(self.starved());
        }
        let n = bits_to_nat(&rest[k + 1..2 * k + 1]).map_err(|_| Status::Failed(Fault::Overflow))?;
        self.cursor += 2 * k + 1;
        Ok(n)
    }

    fn ensure_room(&self, extra: u64) -> Result<(), Status> {
        if self.output.len() as u64 + extra > self.output_limit as u64 {
            Err(Status::Failed(Fault::OutputLimit))
        } else {
            Ok(())
        }
    }

    fn emit(&mut self, bit: bool) -> Result<(), Status> {
        self.ensure_room(1)?;
        self.output.push(bit);
        Ok(())
    }

    fn emit_run(&mut self, bit: bool, n: u64) -> Result<(), Status> {
        self.ensure_room(n)?;
        self.output.push_n(bit, n as usize);
        Ok(())
    }

    fn emit_nat(&mut self, n: u64) -> Result<(), Status> {
        let code = nat_to_bits(n);
        self.ensure_room(2 * code.len() as u64 + 1)?;
        write_e1(&mut self.output, &code);
        Ok(())
    }

    fn exec(&mut self) -> Result<(), Status> {
        let frame = self.frames.last().expect("frame stack never empty");
        let pc = frame.pc;
        let op = frame.program.ops[pc];
        let partner = frame.program.partner[pc];
        let mut next = pc + 1;
        match op {
            Op::W0 => self.emit(false)?,
            Op::W1 => self.emit(true)?,
            Op::Rb => {
                let b = self.read_bit()?;
                self.emit(b)?;
            }
            Op::Rn => {
                let k = self.read_unary()?;
                self.top_mut().acc = k;
            }
            Op::Wn => {
                let a = self.top().acc;
                self.ensure_room(a.saturating_add(1))?;
                self.output.push_n(true, a as usize);
                self.output.push(false);
            }
            Op::Rnb => {
                let n = self.read_nat()?;
                self.top_mut().acc = n;
            }
            Op::Wnb => self.emit_nat(self.top().acc)?,
            Op::Lp => {
                let end = partner.ok_or(Status::Failed(Fault::BadLoop))?;
                let count = self.top().acc;
                if count == 0 {
                    next = end + 1;
                } else {
                    self.top_mut().loop_stack.push((pc, count));
                }
            }
            Op::Ep => {
                let start = partner.ok_or(Status::Failed(Fault::BadLoop))?;
                let frame = self.top_mut();
                match frame.loop_stack.last_mut() {
                    Some((s, remaining)) if *s == start => {
                        *remaining -= 1;
                        if *remaining > 0 {
                            next = start + 1;
                        } else {
                            frame.loop_stack.pop();
                        }
                    }
                    _ => return Err(Status::Failed(Fault::BadLoop)),
                }
            }
            Op::Cr => {
                let n = self.input.len() - self.cursor;
                self.ensure_room(n as u64)?;
                let input = Arc::clone(&self.input);
                self.output.extend_from_bits(&input[self.cursor..]);
                self.cursor = input.len();
                if self.input_open {
                    return Err(Status::NeedInput);
                }
            }
            Op::Inc => {
                let f = self.top_mut();
                f.acc = f.acc.saturating_add(1);
            }
            Op::Dec => {
                let f = self.top_mut();
                f.acc = f.acc.saturating_sub(1);
            }
            Op::Ev => {
                let program = self.read_framed_program()?;
                // The caller resumes after EV once the callee halts.
                self.top_mut().pc = next;
                self.frames.push(Frame::new(Arc::new(program)));
                return Ok(());
            }
            Op::Rle => self.exec_rle()?,
            Op::Rld => self.exec_rld()?,
            Op::Reserved => return Err(Status::Failed(Fault::Reserved)),
        }
        self.top_mut().pc = next;
        Ok(())
    }

    fn top_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("frame stack never empty")
    }

    /// Reads `E2(wire)` and parses `wire` as exactly one program. Structural
    /// mismatches are reported as soon as the known bits reveal them.
    fn read_framed_program(&mut self) -> Result<Program, Status> {
        let rest = self.remaining();
        let k = read_unary(rest).ok_or_else(|| self.starved())?;
        if rest.len() < 2 * k + 1 {
            return Err(self.starved());
        }
        let len = bits_to_nat(&rest[k + 1..2 * k + 1]).map_err(|_| Status::Failed(Fault::BadProgram))?;
        let Some(count) = usize::try_from(len).ok().and_then(count_for_wire_len) else {
            return Err(Status::Failed(Fault::BadProgram));
        };
        let len = len as usize;
        let payload = &rest[2 * k + 1..];
        // The envelope of the framed wire must announce `count` opcodes.
        let envelope = wire_len(0) + 2 * nat_len(count as u64);
        let known = &payload[..payload.len().min(len)];
        if known.len() >= envelope {
            match e1_decode(known) {
                Ok((c, _)) if bits_to_nat(&c) == Ok(count as u64) => {}
                _ => return Err(Status::Failed(Fault::BadProgram)),
            }
        } else if let Some(u) = read_unary(known) {
            if u != nat_len(count as u64) {
                return Err(Status::Failed(Fault::BadProgram));
            }
        } else if known.len() > nat_len(count as u64) {
            return Err(Status::Failed(Fault::BadProgram));
        }
        if payload.len() < len {
            return Err(self.starved());
        }
        let program = parse_exact(&payload[..len]).map_err(|_| Status::Failed(Fault::BadProgram))?;
        self.cursor += 2 * k + 1 + len;
        Ok(program)
    }

    fn exec_rle(&mut self) -> Result<(), Status> {
        let input = Arc::clone(&self.input);
        let rest = &input[self.cursor..];
        self.cursor = input.len();
        let Some(&first) = rest.first() else {
            return if self.input_open { Err(Status::NeedInput) } else { Ok(()) };
        };
        self.emit(first)?;
        let mut runs = rest.chunk_by(|a, b| a == b).map(|c| c.len() as u64).peekable();
        while let Some(n) = runs.next() {
            if self.input_open && runs.peek().is_none() {
                // The last run may continue past the known prefix.
                return Err(Status::NeedInput);
            }
            self.emit_nat(n)?;
        }
        Ok(())
    }

    fn exec_rld(&mut self) -> Result<(), Status> {
        if self.cursor == self.input.len() {
            return if self.input_open { Err(Status::NeedInput) } else { Ok(()) };
        }
        let mut bit = self.read_bit()?;
        loop {
            if self.cursor == self.input.len() {
                return if self.input_open { Err(Status::NeedInput) } else { Ok(()) };
            }
            let n = self.read_nat()?;
            self.emit_run(bit, n)?;
            bit = !bit;
        }
    }
}

/// Runs `p` on `input` for at most `fuel` steps.
pub fn run(p: &Program, input: &BitString, fuel: u64) -> RunOutcome {
    run_state(VmState::new(Arc::new(p.clone()), Arc::new(input.clone())), fuel)
}

/// Continues `state` for at most `fuel` more steps.
pub fn run_state(mut state: VmState, fuel: u64) -> RunOutcome {
    match state.run(fuel) {
        Status::Halted => RunOutcome::Halted { steps: state.steps_used, output: state.output },
        Status::Failed(fault) => RunOutcome::Failed { fault, steps: state.steps_used },
        Status::Running => RunOutcome::OutOfFuel(Box::new(state)),
        Status::NeedInput => unreachable!("closed-input run cannot starve"),
    }
}

/// Length of the `[EV]` program wire: the constant of the universal feature.
pub fn universal_feature_len() -> usize {
    Program::from_ops(&[Op::Ev]).len_bits()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{all_up_to, e2_encode, encode_nat};

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn asm(s: &str) -> Program {
        Program::from_asm(s).unwrap()
    }

    /// Host-level run-length decoder, written independently of the VM.
    fn host_rld(r: &[bool]) -> Option<BitString> {
        if r.is_empty() {
            return Some(BitString::new());
        }
        let mut bit = r[0];
        let mut rest = &r[1..];
        let mut out = BitString::new();
        while !rest.is_empty() {
            let (n, tail) = crate::bits::decode_nat(rest).ok()?;
            out.push_n(bit, n as usize);
            bit = !bit;
            rest = tail;
        }
        Some(out)
    }

    fn host_rle(x: &[bool]) -> BitString {
        let mut out = BitString::new();
        if let Some(&first) = x.first() {
            out.push(first);
            let mut i = 0;
            while i < x.len() {
                let mut j = i;
                while j < x.len() && x[j] == x[i] {
                    j += 1;
                }
                out.extend_from_bits(&encode_nat((j - i) as u64));
                i = j;
            }
        }
        out
    }

    #[test]
    fn parse_examples() {
        let zero = b("0");
        let (p, rest) = parse_program(&zero).unwrap();
        assert!(p.ops().is_empty());
        assert!(rest.is_empty());

        // E1(nat_to_bits(1)) = E1("0") = "100", then RLD = 0xE = "1110".
        let rld = asm("RLD");
        assert_eq!(*rld.wire(), b("1001110"));
        let wire = b("1001110");
        let (p, rest) = parse_program(&wire).unwrap();
        assert_eq!(p.ops(), &[Op::Rld]);
        assert!(rest.is_empty());

        assert!(matches!(parse_program(&b("11")), Err(VmError::MalformedProgram(_))));
        assert!(matches!(parse_program(&b("100111")), Err(VmError::MalformedProgram(_))));
    }

    #[test]
    fn reserved_opcode_parses_but_faults() {
        let (p, _) = parse_program(&b("1001111")).unwrap();
        assert_eq!(p.ops(), &[Op::Reserved]);
        assert!(matches!(run(&p, &b(""), 10), RunOutcome::Failed { fault: Fault::Reserved, steps: 1 }));
    }

    #[test]
    fn wire_lengths() {
        assert_eq!(wire_len(0), 1);
        assert_eq!(wire_len(1), 7);
        assert_eq!(wire_len(2), 11);
        assert_eq!(wire_len(3), 17);
        assert_eq!(wire_len(4), 21);
        for k in 0..40 {
            assert_eq!(count_for_wire_len(wire_len(k)), Some(k));
            assert_eq!(asm(&vec!["INC"; k].join(" ")).len_bits(), wire_len(k));
        }
        assert_eq!(count_for_wire_len(8), None);
    }

    #[test]
    fn wires_are_prefix_free() {
        let valid: Vec<BitString> =
            all_up_to(12).filter(|s| parse_exact(s).is_ok()).collect();
        assert!(valid.len() > 256);
        for a in &valid {
            for c in &valid {
                if a != c {
                    assert!(!c.starts_with(a), "{a} prefixes {c}");
                }
            }
        }
    }

    #[test]
    fn empty_program_halts_without_fuel() {
        let out = run(&Program::empty(), &b("0101"), 0);
        assert!(matches!(out, RunOutcome::Halted { ref output, steps: 0 } if output.is_empty()));
        let mut s = VmState::new(Arc::new(Program::empty()), Arc::new(b("")));
        assert_eq!(s.status(), Status::Halted);
        assert_eq!(s.step(), Err(VmError::NotRunning(Status::Halted)));
    }

    #[test]
    fn unary_feature_of_leading_ones() {
        // x = 1^5 0 y with y = 0110: RN reads 5, LP writes five ones.
        let p = asm("RN LP W1 EP W0 CR");
        let r = b("111110").concat(&b("0110"));
        match run(&p, &r, 1000) {
            RunOutcome::Halted { output, steps } => {
                assert_eq!(output, b("1111100110"));
                // RN, LP, then (W1, EP) five times, W0, CR.
                assert_eq!(steps, 2 + 10 + 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rld_example() {
        let r = b("1").concat(&encode_nat(3)).concat(&encode_nat(2));
        let out = run(&asm("RLD"), &r, 10);
        assert_eq!(out.halted_output(), Some(&b("11100")));
        assert_eq!(host_rld(&r), Some(b("11100")));
    }

    #[test]
    fn rle_rld_agree_with_host_coder() {
        for x in all_up_to(9) {
            let r = run(&asm("RLE"), &x, 1);
            assert_eq!(r.halted_output(), Some(&host_rle(&x)), "RLE {x}");
            let y = run(&asm("RLD"), &host_rle(&x), 1);
            assert_eq!(y.halted_output(), Some(&x));
            // RLD on arbitrary input agrees with the host decoder wherever
            // the host decoder succeeds.
            match (run(&asm("RLD"), &x, 1), host_rld(&x)) {
                (RunOutcome::Halted { output, .. }, Some(h)) => assert_eq!(output, h),
                (RunOutcome::Failed { fault: Fault::InputExhausted, .. }, None) => {}
                (o, h) => panic!("mismatch on {x}: {o:?} vs {h:?}"),
            }
        }
    }

    #[test]
    fn faults() {
        assert!(matches!(run(&asm("RB"), &b(""), 5), RunOutcome::Failed { fault: Fault::InputExhausted, steps: 1 }));
        assert!(matches!(run(&asm("EP"), &b(""), 5), RunOutcome::Failed { fault: Fault::BadLoop, .. }));
        assert!(matches!(run(&asm("INC LP W1"), &b(""), 5), RunOutcome::Failed { fault: Fault::BadLoop, steps: 2 }));
        assert!(matches!(run(&asm("RN"), &b("111"), 5), RunOutcome::Failed { fault: Fault::InputExhausted, .. }));
        assert!(matches!(run(&asm("RNB"), &b("110"), 5), RunOutcome::Failed { fault: Fault::InputExhausted, .. }));
    }

    #[test]
    fn loops() {
        // Zero count skips the body.
        let out = run(&asm("LP W1 EP W0"), &b(""), 10);
        assert!(matches!(out, RunOutcome::Halted { ref output, steps: 2 } if *output == b("0")));
        // Count is snapshotted: INC inside the body does not extend the loop.
        let out = run(&asm("INC INC LP INC W1 EP WNB"), &b(""), 100);
        let mut expect = b("11");
        expect.extend_from_bits(&encode_nat(4));
        assert_eq!(out.halted_output(), Some(&expect));
        // Nested loops: 3 * 3 ones.
        let out = run(&asm("INC INC INC LP LP W1 EP EP"), &b(""), 100);
        assert_eq!(out.halted_output(), Some(&BitString::repeat(true, 9)));
    }

    #[test]
    fn registers_and_numbers() {
        let out = run(&asm("DEC INC INC INC DEC WN WNB"), &b(""), 100);
        let mut expect = b("110");
        expect.extend_from_bits(&encode_nat(2));
        assert_eq!(out.halted_output(), Some(&expect));
        let r = encode_nat(37);
        let out = run(&asm("RNB WN"), &r, 10);
        let mut expect = BitString::repeat(true, 37);
        expect.push(false);
        assert_eq!(out.halted_output(), Some(&expect));
    }

    #[test]
    fn ev_runs_framed_program_with_shared_counters() {
        let p = asm("RN LP W1 EP W0 CR");
        let tail = b("111001");
        let r = e2_encode(p.wire()).concat(&tail);
        let direct = run(&p, &tail, 1000);
        let via_ev = run(&asm("EV"), &r, 1000);
        match (direct, via_ev) {
            (RunOutcome::Halted { output: a, steps: sa }, RunOutcome::Halted { output: b, steps: sb }) => {
                assert_eq!(a, b);
                assert_eq!(sb, sa + 1);
            }
            other => panic!("{other:?}"),
        }
        // EV followed by more opcodes resumes the caller.
        let r = e2_encode(asm("W1").wire()).concat(&b("0"));
        assert_eq!(run(&asm("EV RB"), &r, 10).halted_output(), Some(&b("10")));
        // A frame that is not a program faults.
        assert!(matches!(
            run(&asm("EV"), &e2_encode(&b("10")), 10),
            RunOutcome::Failed { fault: Fault::BadProgram, .. }
        ));
    }

    #[test]
    fn output_limit() {
        let r = encode_nat(1 << 40);
        let out = run_state(VmState::new(Arc::new(asm("RNB WN")), Arc::new(r)).with_output_limit(1000), 10);
        assert!(matches!(out, RunOutcome::Failed { fault: Fault::OutputLimit, .. }));
    }

    #[test]
    fn stepping_matches_run() {
        let p = Arc::new(asm("RN LP W1 EP W0 CR"));
        let r = Arc::new(b("1111100110"));
        let mut s = VmState::new(Arc::clone(&p), Arc::clone(&r));
        for _ in 0..6 {
            assert_eq!(s.step().unwrap(), Status::Running);
        }
        assert_eq!(s.steps_used(), 6);
        let resumed = run_state(s, 1000);
        let whole = run(&p, &r, 1000);
        assert_eq!(resumed.halted_output(), whole.halted_output());
        assert_eq!(resumed.halted_output(), Some(&b("1111100110")));
    }

    #[test]
    fn open_input_output_is_stable_prefix() {
        let p = Arc::new(asm("RLD"));
        let full = b("1").concat(&encode_nat(3)).concat(&encode_nat(2));
        let whole = run(&p, &full, 10).halted_output().cloned().unwrap();
        for k in 0..full.len() {
            let mut s = VmState::new_open(Arc::clone(&p), Arc::new(full.slice(0..k)));
            assert_eq!(s.run(10), Status::NeedInput);
            assert!(whole.starts_with(s.output()));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn program() -> impl Strategy<Value = Program> {
            proptest::collection::vec(0u8..15, 0..7)
                .prop_map(|v| Program::from_ops(&v.into_iter().map(Op::from_nibble).collect::<Vec<_>>()))
        }

        fn bits(max: usize) -> impl Strategy<Value = BitString> {
            proptest::collection::vec(any::<bool>(), 0..max).prop_map(BitString::from)
        }

        fn summary(o: &RunOutcome) -> (u8, Option<BitString>, u64) {
            match o {
                RunOutcome::Halted { output, steps } => (0, Some(output.clone()), *steps),
                RunOutcome::Failed { steps, .. } => (1, None, *steps),
                RunOutcome::OutOfFuel(s) => (2, Some(s.output().clone()), s.steps_used()),
            }
        }

        proptest! {
            #[test]
            fn resumability(p in program(), x in bits(40), a in 0u64..30, c in 0u64..30) {
                let first = run(&p, &x, a);
                let split = match first {
                    RunOutcome::OutOfFuel(s) => run_state(*s, c),
                    done => done,
                };
                let whole = run(&p, &x, a + c);
                prop_assert_eq!(summary(&split), summary(&whole));
            }

            #[test]
            fn parse_roundtrip(p in program(), tail in bits(20)) {
                let s = p.wire().concat(&tail);
                let (q, rest) = parse_program(&s).unwrap();
                prop_assert_eq!(&q, &p);
                prop_assert_eq!(rest, &tail[..]);
            }

            #[test]
            fn halted_is_stable_under_more_fuel(p in program(), x in bits(40)) {
                if let RunOutcome::Halted { output, steps } = run(&p, &x, 200) {
                    let again = run(&p, &x, 10_000);
                    prop_assert_eq!(summary(&again), (0, Some(output), steps));
                }
            }

            #[test]
            fn feeding_bit_by_bit_matches_a_closed_run(p in program(), x in bits(30)) {
                let mut s = VmState::new_open(Arc::new(p.clone()), Arc::new(BitString::new()));
                let mut fed = 0;
                while s.run(200 - s.steps_used()) == Status::NeedInput {
                    if fed < x.len() {
                        s.feed(&x[fed..fed + 1]).unwrap();
                        fed += 1;
                    } else {
                        s.close_input().unwrap();
                    }
                }
                let whole = run(&p, &x, 200);
                let (kind, out, steps) = summary(&whole);
                prop_assert_eq!(s.steps_used(), steps);
                match kind {
                    0 => prop_assert_eq!(Some(s.output().clone()), out),
                    1 => prop_assert!(matches!(s.status(), Status::Failed(_))),
                    _ => prop_assert_eq!(s.status(), Status::Running),
                }
            }

            #[test]
            fn open_prefix_runs_are_consistent(p in program(), x in bits(30), k in 0usize..30) {
                let k = k.min(x.len());
                let mut s = VmState::new_open(Arc::new(p.clone()), Arc::new(x.slice(0..k)));
                let st = s.run(200);
                if let RunOutcome::Halted { output, .. } = run(&p, &x, 200) {
                    match st {
                        Status::NeedInput => prop_assert!(output.starts_with(s.output())),
                        Status::Halted => prop_assert_eq!(&output, s.output()),
                        _ => {}
                    }
                }
            }
        }
    }
}
