//! Incremental descriptions `D_s = <s, r_s, f_s ... f_1>` and their decoder.
//!
//! Wire layout: `E2(nat_to_bits(s)) E2(r_s) f_s ... f_1`. The features are
//! bare program wires; each is self-delimiting, so the decoder simply parses
//! the next one from the stream.
//!
//! On disk a description is wrapped in the ICD1 container: the magic
//! `ICD1`, a version byte, the wire length in bits as a big-endian `u64`,
//! then the wire packed MSB-first and zero padded to a byte boundary.

use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::bits::{bits_to_nat, e2_decode, e2_len, nat_to_bits, write_e2, BitString};
use crate::engine::FeatureStep;
use crate::vm::{parse_program, run_state, Fault, Program, RunOutcome, VmState, DEFAULT_OUTPUT_LIMIT};

pub const MAGIC: &[u8; 4] = b"ICD1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 13;
/// Fuel used when the caller has no better bound.
pub const DEFAULT_DECODE_FUEL: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("malformed description: {0}")]
    MalformedDescription(&'static str),
    #[error("feature {index} faulted: {fault:?}")]
    FeatureFault { index: usize, fault: Fault },
    #[error("decoder ran out of fuel")]
    OutOfFuel,
    #[error("feature {index} does not reproduce its parent")]
    ChainBroken { index: usize },
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("container length mismatch")]
    LengthMismatch,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Description {
    pub r_s: BitString,
    /// `f_s, ..., f_1`: the order they are applied when decoding.
    pub features: Vec<Program>,
    pub wire: BitString,
}

impl Description {
    /// Builds the wire from parts without replaying them.
    pub fn from_parts(r_s: BitString, features: Vec<Program>) -> Self {
        let mut wire = BitString::new();
        write_e2(&mut wire, &nat_to_bits(features.len() as u64));
        write_e2(&mut wire, &r_s);
        for f in &features {
            wire.extend_from_bits(f.wire());
        }
        Self { r_s, features, wire }
    }

    /// The `s = 0` description: `x` stored verbatim.
    pub fn trivial(x: &BitString) -> Self {
        Self::from_parts(x.clone(), Vec::new())
    }

    pub fn s(&self) -> usize {
        self.features.len()
    }

    pub fn len_bits(&self) -> usize {
        self.wire.len()
    }

    /// Expected wire length from the parts alone.
    pub fn predicted_len(&self) -> usize {
        e2_len(nat_to_bits(self.s() as u64).len())
            + e2_len(self.r_s.len())
            + self.features.iter().map(Program::len_bits).sum::<usize>()
    }

    pub fn decode(&self, fuel: u64) -> Result<BitString, DescriptorError> {
        decode_description(&self.wire, fuel)
    }
}

fn apply(f: &Program, input: BitString, index: usize, fuel: &mut u64) -> Result<BitString, DescriptorError> {
    let state = VmState::new(Arc::new(f.clone()), Arc::new(input)).with_output_limit(DEFAULT_OUTPUT_LIMIT);
    match run_state(state, *fuel) {
        RunOutcome::Halted { output, steps } => {
            *fuel -= steps;
            Ok(output)
        }
        RunOutcome::Failed { fault, .. } => Err(DescriptorError::FeatureFault { index, fault }),
        RunOutcome::OutOfFuel(_) => Err(DescriptorError::OutOfFuel),
    }
}

/// Builds the description of `x` from a feature path (outermost first, as
/// the searches report it), checking that every feature reproduces its
/// parent.
pub fn encode_description(x: &BitString, path: &[FeatureStep], fuel: u64) -> Result<Description, DescriptorError> {
    let mut fuel = fuel;
    let mut parent = x;
    for (i, step) in path.iter().enumerate() {
        let index = path.len() - i;
        if apply(&step.f, step.r.clone(), index, &mut fuel)? != *parent {
            return Err(DescriptorError::ChainBroken { index });
        }
        parent = &step.r;
    }
    let r_s = path.last().map_or_else(|| x.clone(), |s| s.r.clone());
    Ok(Description::from_parts(r_s, path.iter().rev().map(|s| s.f.clone()).collect()))
}

/// Parses a wire into its parts without running anything.
pub fn parse_description(wire: &[bool]) -> Result<Description, DescriptorError> {
    let (s_code, rest) = e2_decode(wire).map_err(|_| DescriptorError::MalformedDescription("bad feature count"))?;
    let s = bits_to_nat(&s_code).map_err(|_| DescriptorError::MalformedDescription("feature count overflow"))?;
    let (r_s, mut rest) = e2_decode(rest).map_err(|_| DescriptorError::MalformedDescription("bad residual frame"))?;
    let mut features = Vec::new();
    for _ in 0..s {
        if rest.is_empty() {
            return Err(DescriptorError::MalformedDescription("missing feature"));
        }
        let (f, tail) = parse_program(rest).map_err(|_| DescriptorError::MalformedDescription("bad feature wire"))?;
        features.push(f);
        rest = tail;
    }
    if !rest.is_empty() {
        return Err(DescriptorError::MalformedDescription("trailing bits"));
    }
    Ok(Description { r_s, features, wire: BitString::from(wire) })
}

/// The decoder: read `s` and `r_s`, then apply `f_s, ..., f_1` in turn.
pub fn decode_description(wire: &[bool], fuel: u64) -> Result<BitString, DescriptorError> {
    let d = parse_description(wire)?;
    let s = d.s();
    let mut fuel = fuel;
    let mut current = d.r_s;
    for (i, f) in d.features.iter().enumerate() {
        current = apply(f, current, s - i, &mut fuel)?;
    }
    Ok(current)
}

pub fn to_container(d: &Description) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + d.wire.len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(d.wire.len() as u64).to_be_bytes());
    out.extend_from_slice(&d.wire.to_bytes());
    out
}

/// Unpacks and parses a container. Padding bits must be zero.
pub fn from_container(bytes: &[u8]) -> Result<Description, DescriptorError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(DescriptorError::BadMagic);
    }
    if bytes.len() < 5 {
        return Err(DescriptorError::LengthMismatch);
    }
    if bytes[4] != VERSION {
        return Err(DescriptorError::BadVersion(bytes[4]));
    }
    let len_bytes: [u8; 8] = bytes.get(5..HEADER_LEN).ok_or(DescriptorError::LengthMismatch)?.try_into().unwrap();
    let bit_len = u64::from_be_bytes(len_bytes);
    let payload = &bytes[HEADER_LEN..];
    if bit_len.div_ceil(8) != payload.len() as u64 {
        return Err(DescriptorError::LengthMismatch);
    }
    let all = BitString::from_bytes(payload);
    let bit_len = bit_len as usize;
    if all[bit_len..].iter().any(|&b| b) {
        return Err(DescriptorError::LengthMismatch);
    }
    parse_description(&all[..bit_len])
}

pub fn write_file(d: &Description, path: impl AsRef<Path>) -> Result<(), DescriptorError> {
    fs::write(path, to_container(d))?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Description, DescriptorError> {
    from_container(&fs::read(path)?)
}
