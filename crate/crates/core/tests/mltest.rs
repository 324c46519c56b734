use alice_core::bits::{all_of_len, all_up_to, BitString};
use alice_core::mltest::{
    delta_bound_check, leading_zeros_bound, leading_zeros_program, phi, test_to_feature, ConcreteTest, RandomnessTest,
};
use alice_core::vm::{run, Program, RunOutcome};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(src: &str) -> Program {
    Program::from_asm(src).unwrap()
}

fn features() -> Vec<Program> {
    vec![p("RLD"), p("CR"), p("RLE"), p("RB RB"), p("RNB LP W1 EP CR"), leading_zeros_program()]
}

/// Shortest `r` with `f(r) = x`, by running `f` on every candidate.
fn shortest_residual(f: &Program, x: &BitString, max_r: usize, t: u64) -> Option<BitString> {
    all_up_to(max_r).find(|r| matches!(run(f, r, t), RunOutcome::Halted { ref output, .. } if output == x))
}

fn code_len(n: u64) -> i64 {
    (n + 1).ilog2() as i64
}

#[test]
fn index_roundtrip_is_a_bijection() {
    for test in [ConcreteTest::LeadingZeros, ConcreteTest::OddPositionOnes] {
        for m in 1..=12 {
            let hf = test_to_feature(&test, m, 12).unwrap();
            let v: Vec<BitString> = all_of_len(12).filter(|x| test.delta(x) >= m).collect();
            assert_eq!(hf.members, v);
            for (i, x) in v.iter().enumerate() {
                let r = hf.encode_index(x).unwrap();
                assert_eq!(r.len(), 12 - m);
                assert_eq!(r.to_binary_u64(), Some(i as u64));
                assert_eq!(&hf.decode(&r).unwrap(), x);
                assert!(12 > hf.nominal_len() + r.len());
            }
            if let Some(past) = BitString::from_binary_u64(v.len() as u64, 12 - m) {
                assert!(hf.decode(&past).is_err());
            }
        }
    }
}

#[test]
fn test_set_sizes() {
    // Fixing the leading m bits, or the m odd positions, frees the rest.
    for m in 1..=12usize {
        let lz = test_to_feature(&ConcreteTest::LeadingZeros, m, 12).unwrap();
        assert_eq!(lz.members.len(), 1 << (12 - m));
        let odd = test_to_feature(&ConcreteTest::OddPositionOnes, m, 12).unwrap();
        let expect = if 2 * m - 1 <= 12 { 1 << (12 - m) } else { 0 };
        assert_eq!(odd.members.len(), expect, "m = {m}");
    }
    assert_eq!(test_to_feature(&ConcreteTest::OddPositionOnes, 6, 12).unwrap().members.len(), 64);
    let empty = test_to_feature(&ConcreteTest::LeadingZeros, 13, 12).unwrap();
    assert!(empty.members.is_empty());
    assert!(empty.decode(&BitString::new()).is_err());
}

#[test]
fn cardinality_bound_for_several_features() {
    for f in features() {
        for n in [4, 8, 12] {
            for t in [1, 10, 1000] {
                let rep = delta_bound_check(&f, n, t).unwrap();
                assert_eq!(rep.histogram.iter().sum::<u64>(), 1 << n);
                assert!(rep.violations.is_empty(), "{} n={n} t={t}: {:?}", f.asm(), rep.histogram);
                for m in 1..=n {
                    assert!(rep.at_least(m) <= 1 << (n - m));
                }
            }
        }
    }
}

#[test]
fn run_length_deficiency() {
    let f = p("RLD");
    let mut x = BitString::repeat(true, 12);
    x.push_n(false, 12);
    let r = shortest_residual(&f, &x, 16, 100).unwrap();
    assert_eq!(r.len(), 15);
    assert_eq!(phi(&f, &x, 100), x.len() - r.len() - 1);
    assert_eq!(phi(&f, &x, 0), 0);
}

#[test]
fn random_strings_have_no_deficiency() {
    let f = p("RLD");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x: BitString = (0..12).map(|_| rng.gen_bool(0.5)).collect();
        let expect = shortest_residual(&f, &x, 12 - 7 - 1, 100).map_or(0, |r| 12 - r.len() - 1);
        assert_eq!(expect, 0);
        assert_eq!(phi(&f, &x, 100), 0);
    }
}

#[test]
fn leading_zeros_deficiency() {
    let f = leading_zeros_program();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for a in 20..=80u64 {
        let w: BitString = (0..rng.gen_range(0..12)).map(|_| rng.gen_bool(0.5)).collect();
        let x = BitString::repeat(false, a as usize).concat(&w);
        let bound = a as i64 - 2 * code_len(a) - 2;
        assert_eq!(leading_zeros_bound(a), bound);
        // The residual is E1(a) w; the bound needs the pair to compress.
        let pair_len = f.len_bits() as i64 + 2 * code_len(a) + 1 + w.len() as i64;
        if pair_len < x.len() as i64 {
            assert!(phi(&f, &x, 10_000) as i64 >= bound, "a = {a}");
            checked += 1;
        }
    }
    assert_eq!(checked, 80 - 37 + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_grows_with_t(bits in proptest::collection::vec(any::<bool>(), 0..16), i in 0usize..6, t in 0u64..20) {
        let x = BitString::from(bits);
        let f = &features()[i];
        prop_assert!(phi(f, &x, t) <= phi(f, &x, t + 1));
        prop_assert!(phi(f, &x, t) <= phi(f, &x, 10 * t + 100));
    }
}
