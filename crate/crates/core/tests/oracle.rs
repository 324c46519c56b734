use std::sync::Arc;

use alice_core::bits::{all_of_len, all_up_to, encode_nat, BitString};
use alice_core::corpus;
use alice_core::engine::enumerate::programs_of_len;
use alice_core::engine::{greedy_alice, Scheme, SearchConfig};
use alice_core::oracle::{
    bounded_complexity, first_accepting_pair, preimages, shortest_bounded_features, OracleCaps,
};
use alice_core::vm::{run, Program, RunOutcome, Status, VmState};

fn b(s: &str) -> BitString {
    s.parse().unwrap()
}

/// Caps for the 250-bit corpus string: the residual search is exponential
/// in the room left for `r`, so programs stay at one opcode.
fn rle_caps() -> OracleCaps {
    OracleCaps { max_pair_len: 34, step_cap: 10_000, max_f_len: 7 }
}

#[test]
fn strings_too_short_to_compress() {
    for x in ["", "0", "1", "01", "10"] {
        assert_eq!(first_accepting_pair(&b(x), &OracleCaps::default(), Scheme::Plain), None, "{x}");
    }
    assert_eq!(shortest_bounded_features(&b("01"), &OracleCaps::default(), Scheme::Plain).len, None);
}

#[test]
fn empty_string() {
    let k = bounded_complexity(&BitString::new(), &OracleCaps::default());
    assert_eq!(k.value, 1);
    assert_eq!(k.witness.unwrap().f, Program::empty());
}

#[test]
fn rle_corpus_pair() {
    let x = corpus::rle_example();
    let caps = rle_caps();
    let rld = Program::from_asm("RLD").unwrap();
    let r = BitString::from(vec![true]).concat(&encode_nat(200)).concat(&encode_nat(50));
    assert_eq!(r.len(), 27);

    let hit = first_accepting_pair(&x, &caps, Scheme::Plain).unwrap();
    assert_eq!((&hit.f, &hit.r), (&rld, &r));

    let sf = shortest_bounded_features(&x, &caps, Scheme::Plain);
    assert_eq!(sf.len, Some(7));
    assert_eq!(sf.features, vec![rld]);
    assert_eq!(sf.caps, caps);
}

/// `K̂(x) <= l(f) + K̂(r)` whenever `f(r) = x`.
#[test]
fn complexity_is_subadditive_along_a_feature() {
    let x = corpus::ones_then_zeros(40, 20);
    let caps = OracleCaps { max_pair_len: 28, step_cap: 10_000, max_f_len: 11 };
    let g = greedy_alice(&x, &SearchConfig::default().with_budget(1_000_000));
    let step = &g.features[0];
    let kx = bounded_complexity(&x, &caps);
    let kr = bounded_complexity(&step.r, &caps);
    assert!(kx.value <= step.f_len() + kr.value, "{} > {} + {}", kx.value, step.f_len(), kr.value);
    assert_eq!(kx.value, 28);
    assert_eq!(kx.witness.unwrap().f, Program::from_asm("RLD").unwrap());
}

#[test]
fn complexity_never_rises_with_caps() {
    let ladder = [
        OracleCaps { max_pair_len: 0, step_cap: 0, max_f_len: 0 },
        OracleCaps { max_pair_len: 8, step_cap: 1, max_f_len: 7 },
        OracleCaps { max_pair_len: 12, step_cap: 8, max_f_len: 7 },
        OracleCaps { max_pair_len: 14, step_cap: 64, max_f_len: 11 },
    ];
    for x in all_up_to(5) {
        let values: Vec<usize> = ladder.iter().map(|c| bounded_complexity(&x, c).value).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{x}: {values:?}");
    }
}

#[test]
fn reruns_are_identical() {
    let x = b("1111111111110000");
    let caps = OracleCaps { max_pair_len: 20, ..OracleCaps::default() };
    let once = serde_json::to_string(&bounded_complexity(&x, &caps)).unwrap();
    let twice = serde_json::to_string(&bounded_complexity(&x, &caps)).unwrap();
    assert_eq!(once, twice);
}

/// Residuals the preimage search must report: `f(r) = x` on the closed
/// input, and every proper prefix leaves an open run waiting for input.
fn brute_preimages(f: &Program, x: &BitString, max_r: usize, cap: u64) -> Vec<BitString> {
    let f = Arc::new(f.clone());
    all_up_to(max_r)
        .filter(|r| matches!(run(&f, r, cap), RunOutcome::Halted { ref output, .. } if output == x))
        .filter(|r| {
            (0..r.len()).all(|k| {
                let mut s = VmState::new_open(Arc::clone(&f), Arc::new(r.slice(0..k))).with_output_limit(x.len());
                s.run(cap) == Status::NeedInput
            })
        })
        .collect()
}

#[test]
fn preimages_match_brute_force() {
    let programs: Vec<Program> = [7, 11].into_iter().flat_map(programs_of_len).collect();
    for x in ["", "0", "110", "0110", "11100"].map(b) {
        for f in &programs {
            assert_eq!(preimages(f, &x, 7, 64), brute_preimages(f, &x, 7, 64), "{} on {x}", f.asm());
        }
    }
}

/// Every length-10 string printed by some `(f, r)` with `l(f) + l(r) < 10`.
fn compressible_at_ten(cap: u64) -> Vec<BitString> {
    let mut out = Vec::new();
    for lf in [1, 7] {
        for f in programs_of_len(lf) {
            for r in all_up_to(9 - lf) {
                if let RunOutcome::Halted { output, .. } = run(&f, &r, cap) {
                    if output.len() == 10 {
                        out.push(output);
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[test]
fn length_ten_sweep() {
    let caps = OracleCaps { max_pair_len: 9, step_cap: 256, max_f_len: 9 };
    let expected = compressible_at_ten(caps.step_cap);
    let mut found = Vec::new();
    for x in all_of_len(10) {
        let sf = shortest_bounded_features(&x, &caps, Scheme::Plain);
        if let Some(len) = sf.len {
            assert!(!sf.features.is_empty());
            assert!(len <= 9);
            found.push(x);
        }
    }
    assert_eq!(found, expected);
    // Golden: no string of length 10 has a feature under these caps.
    assert_eq!(found.len(), 0);
}
