use alice_core::bits::BitString;
use alice_core::corpus;
use alice_core::descriptor::{encode_description, DEFAULT_DECODE_FUEL};
use alice_core::engine::{
    alice, cumulative_allotment, greedy_alice, predicted_budget, BudgetStep, Dovetailer, Poll, Scheme, SearchConfig,
    StopReason,
};
use alice_core::oracle::{first_accepting_autoencoder, AutoencoderUniverse};
use alice_core::vm::{run, universal_feature_len, Program, RunOutcome};
use proptest::prelude::*;

fn small() -> SearchConfig {
    SearchConfig::default().with_max_a_len(14).with_node_step_cap(Some(256))
}

fn bits(min: usize, max: usize) -> impl Strategy<Value = BitString> {
    proptest::collection::vec(any::<bool>(), min..max).prop_map(BitString::from)
}

/// Every step decodes to its parent.
fn chain_holds(x: &BitString, steps: &[alice_core::engine::FeatureStep]) -> bool {
    let mut parent = x.clone();
    for s in steps {
        match run(&s.f, &s.r, 1 << 20) {
            RunOutcome::Halted { output, .. } if output == parent => parent = s.r.clone(),
            _ => return false,
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn allotments_hold_at_every_boundary(x in bits(0, 24)) {
        let mut d = Dovetailer::recursive(x, &small());
        let mut finds = Vec::new();
        for _ in 0..16 {
            let poll = d.run_phase(&mut finds);
            prop_assert!(d.at_phase_boundary());
            prop_assert!(d.check_allotments().is_ok(), "{:?}", d.check_allotments());
            let stats = d.stats();
            let last = stats.phases.last().unwrap();
            prop_assert!(last.total_steps as u128 <= 1u128 << (last.phase + 1));
            for node in d.node_table().iter().filter(|n| n.a_wire.len() <= last.phase as usize) {
                prop_assert!(node.allotted <= cumulative_allotment(last.phase, node.a_wire.len()));
            }
            if poll == Poll::Exhausted {
                break;
            }
        }
    }

    #[test]
    fn pausing_does_not_change_the_search(x in bits(2, 20), chunks in proptest::collection::vec(1u64..400, 1..12)) {
        let config = small();
        let mut whole = Dovetailer::new(x.clone(), &config);
        let total: u64 = chunks.iter().sum();
        let expect = whole.run(total);
        let mut split = Dovetailer::new(x, &config);
        let mut got = Poll::Paused;
        for c in chunks {
            got = split.run(c);
            if got != Poll::Paused {
                break;
            }
        }
        prop_assert_eq!(got, expect);
        prop_assert_eq!(split.total_steps(), whole.total_steps());
    }

    #[test]
    fn greedy_residuals_shrink_and_decode(x in bits(2, 40)) {
        let g = greedy_alice(&x, &small().with_budget(20_000));
        prop_assert!(chain_holds(&x, &g.features));
        let mut parent = x.len();
        for s in &g.features {
            prop_assert!(s.f_len() + s.r.len() < parent);
            prop_assert_eq!(s.parent_len, parent);
            parent = s.r.len();
        }
        prop_assert!(g.steps_used <= 20_000);
    }
}

#[test]
fn deterministic() {
    let x = corpus::two_layer(12, 3);
    let config = SearchConfig::default().with_budget(300_000);
    assert_eq!(greedy_alice(&x, &config), greedy_alice(&x, &config));
    assert_eq!(alice(&x, &config), alice(&x, &config));
}

#[test]
fn rle_corpus_takes_one_step_then_exhausts() {
    let x = corpus::rle_example();
    let g = greedy_alice(&x, &SearchConfig::default());
    assert_eq!(g.features.len(), 1);
    let step = &g.features[0];
    assert_eq!(step.f, Program::from_asm("RLD").unwrap());
    assert_eq!(step.phase_found, 15);
    assert_eq!(g.stop, StopReason::SearchExhausted);
    assert_eq!(g.searches.len(), 2);

    // Ground truth for both searches.
    let universe = AutoencoderUniverse::brute_force(14);
    let hit = first_accepting_autoencoder(&universe, &x, 10_000, Scheme::Plain).unwrap();
    assert_eq!(hit.a_wire, step.a_wire);
    assert_eq!(hit.phase, step.phase_found);
    assert_eq!(hit.r, step.r);
    let universe = AutoencoderUniverse::brute_force(18);
    assert_eq!(first_accepting_autoencoder(&universe, &g.residual, 10_000, Scheme::Plain), None);

    // The first search finishes within its predicted budget.
    let bound = predicted_budget(&[BudgetStep::from(step)], 1);
    assert!(bound >= g.searches[0].total_steps.into());
}

#[test]
fn two_layer_corpus_compresses() {
    let x = corpus::two_layer(40, 4);
    let g = greedy_alice(&x, &SearchConfig::default().with_budget(1_000_000));
    assert!(!g.features.is_empty());
    let d = encode_description(&x, &g.features, DEFAULT_DECODE_FUEL).unwrap();
    assert!(d.len_bits() < x.len());
    assert_eq!(d.decode(DEFAULT_DECODE_FUEL).unwrap(), x);
}

#[test]
fn alternating_runs_compress_in_two_steps() {
    let x = corpus::alternating_runs(126, 8);
    let g = greedy_alice(&x, &SearchConfig::default().with_budget(2_000_000));
    assert_eq!(g.features.len(), 2);
    assert!(chain_holds(&x, &g.features));
    let one = encode_description(&x, &g.features[..1], DEFAULT_DECODE_FUEL).unwrap();
    let two = encode_description(&x, &g.features, DEFAULT_DECODE_FUEL).unwrap();
    assert_eq!(two.s(), 2);
    assert!(two.len_bits() < one.len_bits());
    assert_eq!(two.decode(DEFAULT_DECODE_FUEL).unwrap(), x);
}

#[test]
fn recursive_search_contains_the_greedy_chain() {
    let x = corpus::alternating_runs(126, 8);
    let config = SearchConfig::default().with_budget(2_000_000);
    let g = greedy_alice(&x, &config);
    let a = alice(&x, &config);
    assert_eq!(a.finds[0].path, g.features[..1].to_vec());
    let best = |paths: Vec<&[alice_core::engine::FeatureStep]>| {
        paths.into_iter().map(|p| encode_description(&x, p, DEFAULT_DECODE_FUEL).unwrap().len_bits()).min().unwrap()
    };
    let greedy_best = best((1..=g.features.len()).map(|k| &g.features[..k]).collect());
    let alice_best = best(a.finds.iter().map(|f| f.path.as_slice()).collect());
    assert!(alice_best <= greedy_best, "{alice_best} > {greedy_best}");
    for f in &a.finds {
        assert!(chain_holds(&x, &f.path));
    }
}

#[test]
fn zero_budget_finds_nothing() {
    let x = corpus::rle_example();
    let config = SearchConfig::default().with_budget(0);
    let a = alice(&x, &config);
    assert!(a.finds.is_empty());
    assert_eq!(a.stop, StopReason::BudgetExhausted);
    let g = greedy_alice(&x, &config);
    assert!(g.features.is_empty());
    assert_eq!(g.steps_used, 0);
}

#[test]
fn b_features_respect_the_ratio() {
    let scheme = Scheme::b_feature(3, 1).unwrap();
    for x in [corpus::rle_example(), corpus::ones_then_zeros(300, 100)] {
        let g = greedy_alice(&x, &SearchConfig::default().with_scheme(scheme).with_budget(600_000));
        assert!(!g.features.is_empty());
        for s in &g.features {
            assert!(3 * s.r.len() <= s.parent_len);
        }
    }
}

#[test]
fn early_termination_on_short_strings() {
    let scheme = Scheme::b_feature_early(2, 1).unwrap();
    let c = universal_feature_len();
    let x = BitString::repeat(true, 2 * c);
    let g = greedy_alice(&x, &SearchConfig::default().with_scheme(scheme));
    assert_eq!(g.stop, StopReason::EarlyTermination);
    assert!(g.features.is_empty());
    assert_eq!(g.steps_used, 0);

    let x = BitString::repeat(true, 2 * c + 1);
    let g = greedy_alice(&x, &small().with_scheme(scheme).with_budget(10_000));
    assert_ne!(g.stop, StopReason::EarlyTermination);
}
