//! Canonical (length-then-lex) enumeration of program wires and of
//! autoencoder wires `a = f'f`.
//!
//! Only valid codewords are enumerated. Concatenating two prefix-free
//! program wires gives a prefix-free set, so the autoencoder wires form a
//! prefix code and their Kraft sum stays below one.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_rational::Ratio;

use crate::vm::{count_for_wire_len, Op, Program};

use super::w::Autoencoder;

/// Largest autoencoder length the engine will materialise.
pub const MAX_A_LEN_LIMIT: usize = 24;

/// Length of the shortest autoencoder wire: two empty programs, `"00"`.
pub const A_MIN_LEN: usize = 2;

/// Number of program wires of exactly `len` bits.
pub fn count_programs_of_len(len: usize) -> u128 {
    match count_for_wire_len(len) {
        Some(k) if k < 32 => 1u128 << (4 * k),
        Some(_) => u128::MAX,
        None => 0,
    }
}

/// Number of autoencoder wires of exactly `len` bits.
pub fn count_autoencoders_of_len(len: usize) -> u128 {
    (1..len).map(|w| count_programs_of_len(w).saturating_mul(count_programs_of_len(len - w))).sum()
}

/// Kraft partial sum `Σ_{l(a) <= n} 2^{-l(a)}` over autoencoder wires.
pub fn theta(n: usize) -> Ratio<u128> {
    let mut acc = Ratio::from_integer(0u128);
    for len in A_MIN_LEN..=n {
        let c = count_autoencoders_of_len(len);
        if c > 0 {
            acc += Ratio::new(c, 1u128 << len);
        }
    }
    acc
}

/// All programs whose wire has exactly `len` bits, in lex order of wire.
pub fn programs_of_len(len: usize) -> Vec<Program> {
    let Some(k) = count_for_wire_len(len) else {
        return Vec::new();
    };
    assert!(k <= 6, "refusing to enumerate 16^{k} programs");
    // The envelope is fixed for a given length, so lex order of the wire is
    // lex order of the opcode nibbles.
    (0..1u64 << (4 * k))
        .map(|code| {
            let ops: Vec<Op> = (0..k).rev().map(|i| Op::from_nibble(((code >> (4 * i)) & 0xF) as u8)).collect();
            Program::from_ops(&ops)
        })
        .collect()
}

fn program_cache() -> &'static Mutex<HashMap<usize, Arc<Vec<Arc<Program>>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Arc<Program>>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached_programs(len: usize) -> Arc<Vec<Arc<Program>>> {
    let mut cache = program_cache().lock().expect("cache poisoned");
    Arc::clone(cache.entry(len).or_insert_with(|| Arc::new(programs_of_len(len).into_iter().map(Arc::new).collect())))
}

fn autoencoder_cache() -> &'static Mutex<HashMap<usize, Arc<[Autoencoder]>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[Autoencoder]>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// All autoencoder wires of exactly `len` bits in lex order. Cached; the
/// same slice is shared by every search that reaches this length.
pub fn autoencoders_of_len(len: usize) -> Arc<[Autoencoder]> {
    assert!(len <= MAX_A_LEN_LIMIT, "autoencoder length {len} exceeds {MAX_A_LEN_LIMIT}");
    if let Some(hit) = autoencoder_cache().lock().expect("cache poisoned").get(&len) {
        return Arc::clone(hit);
    }
    let mut all = Vec::new();
    for w in 1..len {
        if count_programs_of_len(w) == 0 || count_programs_of_len(len - w) == 0 {
            continue;
        }
        let encoders = cached_programs(w);
        let decoders = cached_programs(len - w);
        for fp in encoders.iter() {
            for f in decoders.iter() {
                all.push(Autoencoder::from_arcs(Arc::clone(fp), Arc::clone(f)));
            }
        }
    }
    all.sort_by(|a, b| a.wire().as_bits().cmp(b.wire().as_bits()));
    let all: Arc<[Autoencoder]> = all.into();
    let mut cache = autoencoder_cache().lock().expect("cache poisoned");
    Arc::clone(cache.entry(len).or_insert(all))
}
