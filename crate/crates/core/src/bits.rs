//! Bit strings, the prefix codes `E1`/`E2`, the pairing function and the
//! length-then-lex bijection between naturals and bit strings.
//!
//! Every decoder works on a borrowed `&[bool]` stream and hands back the
//! unconsumed remainder so concatenated codewords can be read one at a time.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Deref, Range};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed code: {0}")]
    MalformedCode(&'static str),
    #[error("natural number does not fit in 64 bits")]
    Overflow,
    #[error("invalid character {0:?} in bit string")]
    BadChar(char),
}

/// A finite string over `{0, 1}` with an explicit length.
///
/// Ordering is length-then-lex, the canonical enumeration order used by the
/// scheduler and the oracle: shorter strings come first, equal lengths
/// compare bit by bit with `0 < 1`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { bits: Vec::with_capacity(n) }
    }

    /// `bit` repeated `n` times.
    pub fn repeat(bit: bool, n: usize) -> Self {
        Self { bits: vec![bit; n] }
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn pop(&mut self) -> Option<bool> {
        self.bits.pop()
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    pub fn push_n(&mut self, bit: bool, n: usize) {
        self.bits.resize(self.bits.len() + n, bit);
    }

    pub fn extend_from_bits(&mut self, bits: &[bool]) {
        self.bits.extend_from_slice(bits);
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.bits
    }

    pub fn slice(&self, range: Range<usize>) -> BitString {
        BitString::from(&self.bits[range])
    }

    pub fn concat(&self, other: &[bool]) -> BitString {
        let mut out = Self::with_capacity(self.len() + other.len());
        out.extend_from_bits(&self.bits);
        out.extend_from_bits(other);
        out
    }

    /// Unpacks bytes most-significant-bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Self::with_capacity(bytes.len() * 8);
        for &b in bytes {
            for k in (0..8).rev() {
                out.push((b >> k) & 1 == 1);
            }
        }
        out
    }

    /// Packs most-significant-bit first, zero padding the last byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, &bit) in self.bits.iter().enumerate() {
            if bit {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    /// Big-endian value of the string read as a plain binary numeral.
    /// `None` if it does not fit in a `u64`.
    pub fn to_binary_u64(&self) -> Option<u64> {
        let first_one = self.bits.iter().position(|&b| b).unwrap_or(self.len());
        if self.len() - first_one > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    /// `value` as a binary numeral padded with leading zeros to `width` bits.
    /// `None` if it needs more than `width` bits.
    pub fn from_binary_u64(value: u64, width: usize) -> Option<Self> {
        if width < 64 && value >> width != 0 {
            return None;
        }
        let mut out = Self::with_capacity(width);
        for k in (0..width).rev() {
            out.push(k < 64 && (value >> k) & 1 == 1);
        }
        Some(out)
    }
}

impl Deref for BitString {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.bits
    }
}

impl From<&[bool]> for BitString {
    fn from(bits: &[bool]) -> Self {
        Self { bits: bits.to_vec() }
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self { bits: iter.into_iter().collect() }
    }
}

impl FromStr for BitString {
    type Err = CodecError;

    /// Parses ASCII `0`/`1`; ASCII whitespace is skipped.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_ascii_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodecError::BadChar(other)),
            })
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 96 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString({}..; len={})", self.slice(0..64), self.len())
        }
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        canonical_cmp(&self.bits, &other.bits)
    }
}

/// Length-then-lex comparison of two bit sequences.
pub fn canonical_cmp(a: &[bool], b: &[bool]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps `n` to the `n`-th string in length-then-lex order:
/// 0 ↔ ε, 1 ↔ "0", 2 ↔ "1", 3 ↔ "00", …
///
/// Equivalently, the binary numeral of `n + 1` without its leading one.
pub fn nat_to_bits(n: u64) -> BitString {
    let m = n as u128 + 1;
    let width = 127 - m.leading_zeros() as usize;
    (0..width).rev().map(|k| (m >> k) & 1 == 1).collect()
}

/// Inverse of [`nat_to_bits`].
pub fn bits_to_nat(x: &[bool]) -> Result<u64, CodecError> {
    if x.len() > 64 {
        return Err(CodecError::Overflow);
    }
    let m = x.iter().fold(1u128, |acc, &b| (acc << 1) | b as u128);
    u64::try_from(m - 1).map_err(|_| CodecError::Overflow)
}

/// Bit length of `nat_to_bits(n)`, i.e. `floor(log2(n + 1))`.
pub fn nat_len(n: u64) -> usize {
    127 - (n as u128 + 1).leading_zeros() as usize
}

/// `E1(x) = 1^{l(x)} 0 x`.
pub fn e1_encode(x: &[bool]) -> BitString {
    let mut out = BitString::with_capacity(2 * x.len() + 1);
    write_e1(&mut out, x);
    out
}

/// Appends `E1(x)` to `out`.
pub fn write_e1(out: &mut BitString, x: &[bool]) {
    out.push_n(true, x.len());
    out.push(false);
    out.extend_from_bits(x);
}

/// Length of the unary header `1^k 0` at the front of `stream`, or `None`
/// when the stream ends before the terminating zero.
pub fn read_unary(stream: &[bool]) -> Option<usize> {
    stream.iter().position(|&b| !b)
}

/// Reads one `E1` codeword, returning the payload and the remainder.
pub fn e1_decode(stream: &[bool]) -> Result<(BitString, &[bool]), CodecError> {
    let n = read_unary(stream).ok_or(CodecError::MalformedCode("stream ends inside E1 header"))?;
    let body = &stream[n + 1..];
    if body.len() < n {
        return Err(CodecError::MalformedCode("stream ends inside E1 payload"));
    }
    Ok((BitString::from(&body[..n]), &body[n..]))
}

/// `E2(x) = E1(nat_to_bits(l(x))) x`.
pub fn e2_encode(x: &[bool]) -> BitString {
    let mut out = BitString::new();
    write_e2(&mut out, x);
    out
}

pub fn write_e2(out: &mut BitString, x: &[bool]) {
    write_e1(out, &nat_to_bits(x.len() as u64));
    out.extend_from_bits(x);
}

pub fn e2_decode(stream: &[bool]) -> Result<(BitString, &[bool]), CodecError> {
    let (len_bits, rest) = e1_decode(stream)?;
    let len = bits_to_nat(&len_bits)?;
    if (rest.len() as u64) < len {
        return Err(CodecError::MalformedCode("stream ends inside E2 payload"));
    }
    let len = len as usize;
    Ok((BitString::from(&rest[..len]), &rest[len..]))
}

/// Exact bit length of `E2(x)` for `l(x) = len`.
pub fn e2_len(len: usize) -> usize {
    len + 2 * nat_len(len as u64) + 1
}

/// `<x, y> = E1(x) y`.
pub fn pair(x: &[bool], y: &[bool]) -> BitString {
    let mut out = e1_encode(x);
    out.extend_from_bits(y);
    out
}

/// Splits `<x, y>` back into `x` and the remainder `y`.
pub fn unpair_first(stream: &[bool]) -> Result<(BitString, &[bool]), CodecError> {
    e1_decode(stream)
}

/// `E1(nat_to_bits(n))`, the self-delimiting number code used by the
/// `RNB`/`WNB` opcodes and the run-length codec.
pub fn encode_nat(n: u64) -> BitString {
    e1_encode(&nat_to_bits(n))
}

pub fn decode_nat(stream: &[bool]) -> Result<(u64, &[bool]), CodecError> {
    let (payload, rest) = e1_decode(stream)?;
    Ok((bits_to_nat(&payload)?, rest))
}

/// All strings of length exactly `n`, in lex order.
pub fn all_of_len(n: usize) -> impl Iterator<Item = BitString> {
    assert!(n < 64, "enumeration of length {n} is not representable");
    (0..1u64 << n).map(move |v| BitString::from_binary_u64(v, n).expect("fits"))
}

/// All strings of length at most `max_len`, in length-then-lex order.
pub fn all_up_to(max_len: usize) -> impl Iterator<Item = BitString> {
    (0..=max_len).flat_map(all_of_len)
}
