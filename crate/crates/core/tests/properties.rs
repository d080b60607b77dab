mod common;

use std::sync::OnceLock;

use common::{random_orders, random_position};
use nopress::adjudicator::adjudicate;
use nopress::features::OrderVocabulary;
use nopress::map::standard_map;
use nopress::order::parse_order;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vocab() -> &'static OrderVocabulary {
    static V: OnceLock<OrderVocabulary> = OnceLock::new();
    V.get_or_init(|| OrderVocabulary::new(standard_map()))
}

#[test]
fn every_vocabulary_order_round_trips_through_text() {
    let map = standard_map();
    for i in 0..vocab().len() {
        let o = vocab().order(i);
        let text = o.to_text(map);
        assert_eq!(parse_order(map, &text).unwrap(), o, "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn text_round_trip_ignores_case(i in 0usize..100_000, lower in any::<bool>()) {
        let map = standard_map();
        let o = vocab().order(i % vocab().len());
        let text = o.to_text(map);
        let text = if lower { text.to_lowercase() } else { text };
        prop_assert_eq!(parse_order(map, &text).unwrap(), o);
    }

    #[test]
    fn resolution_ignores_order_permutation(seed in any::<u64>(), n in 2usize..=12) {
        let map = standard_map();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_position(map, &mut rng, n);
        let mut orders = random_orders(map, &state, &mut rng);
        let first = adjudicate(map, &state, &orders).unwrap();
        orders.shuffle(&mut rng);
        let second = adjudicate(map, &state, &orders).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(first, adjudicate(map, &state, &orders).unwrap());
    }

    #[test]
    fn resolution_conserves_units(seed in any::<u64>(), n in 2usize..=12) {
        let map = standard_map();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_position(map, &mut rng, n);
        let orders = random_orders(map, &state, &mut rng);
        let r = adjudicate(map, &state, &orders).unwrap();
        prop_assert_eq!(r.next.units().len() + r.next.dislodged().len(), state.units().len());
        let mut provinces: Vec<_> = r.next.units().iter().map(|u| map.province(u.loc)).collect();
        provinces.sort();
        provinces.dedup();
        prop_assert_eq!(provinces.len(), r.next.units().len());
    }
}
