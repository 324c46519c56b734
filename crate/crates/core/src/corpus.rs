//! Structured strings that the run-length features compress.

use crate::bits::BitString;

/// `1^ones 0^zeros`.
pub fn ones_then_zeros(ones: usize, zeros: usize) -> BitString {
    let mut x = BitString::repeat(true, ones);
    x.push_n(false, zeros);
    x
}

/// `1^200 0^50`.
pub fn rle_example() -> BitString {
    ones_then_zeros(200, 50)
}

/// `1^n 0 y`.
pub fn run_then(n: usize, y: &[bool]) -> BitString {
    let mut x = BitString::repeat(true, n);
    x.push(false);
    x.extend_from_bits(y);
    x
}

/// `1^n 0 1^(n+1) 0 ... 1^(n+m) 0`.
pub fn two_layer(n: usize, m: usize) -> BitString {
    let mut x = BitString::new();
    for k in n..=n + m {
        x.push_n(true, k);
        x.push(false);
    }
    x
}

/// `runs` alternating runs of `len` bits, starting with ones. Its run-length
/// code is itself highly regular, so it compresses in two layers.
pub fn alternating_runs(len: usize, runs: usize) -> BitString {
    let mut x = BitString::new();
    for i in 0..runs {
        x.push_n(i % 2 == 0, len);
    }
    x
}

/// 50 strings from the `1^n 0 y` and `1^n 0 1^(n+1) 0 ...` families.
pub fn structured() -> Vec<BitString> {
    let mut out = Vec::new();
    for (i, n) in (8..).step_by(7).take(25).enumerate() {
        let y: BitString = (0..i % 9).map(|k| (k * 5 + i) % 3 == 0).collect();
        out.push(run_then(n, &y));
    }
    for i in 0..25 {
        out.push(two_layer(3 + 2 * i, 1 + i % 6));
    }
    out
}
