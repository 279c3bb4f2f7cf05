mod common;

use infocost::cost::{external_ic, info_about_x, info_about_y, internal_ic, law_of, CostReport};
use infocost::protocol::mix_with_exchange;
use infocost::{FunctionTable, JointDistribution, ProtocolTree};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn costs_are_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nx, ny) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let full = rng.gen_bool(0.5);
        let prior = common::dist(&mut rng, nx, ny, full);
        let law = law_of(&common::tree(&mut rng, nx, ny, 5), &prior).unwrap();
        let cap = 2.0 * ((nx * ny) as f64).log2();
        let (int, ext) = (internal_ic(&law), external_ic(&law));
        prop_assert!(int >= 0.0 && int <= cap);
        prop_assert!(ext <= cap);
        prop_assert!(ext >= info_about_x(&law) - 1e-12 && ext >= info_about_y(&law) - 1e-12);
        prop_assert!(CostReport::of(&law).conservation_gap() <= 1e-9);
    }
}

#[test]
fn exchanging_inputs_reveals_everything() {
    let prior = JointDistribution::uniform(2, 2);
    let law = law_of(&ProtocolTree::exchange_inputs(&FunctionTable::and()), &prior).unwrap();
    assert!((internal_ic(&law) - 2.0).abs() < 1e-12);
    assert!((external_ic(&law) - 2.0).abs() < 1e-12);
}

#[test]
fn exchange_mixing_moves_cost_by_at_most_delta_log() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = FunctionTable::xor();
    for _ in 0..50 {
        let prior = common::dist(&mut rng, 2, 2, true);
        let law = law_of(&common::tree(&mut rng, 2, 2, 4), &prior).unwrap();
        let delta = rng.gen_range(0.0..0.3);
        let mixed = mix_with_exchange(&law, delta, &f).unwrap();
        let rise = internal_ic(&mixed) - internal_ic(&law);
        assert!(rise <= delta * 4f64.log2() + 1e-12, "rise {rise} at δ = {delta}");
    }
}
