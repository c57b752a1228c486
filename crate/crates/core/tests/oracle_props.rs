use phide_core::oracle::{deterministic_value, for_each_deterministic, maximize_deterministic};
use phide_core::zoo::{random_game, RandomCaps};
use phide_core::InfoPartition;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: u64 = 200_000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// The pruned search agrees with plain enumeration, with or without perfect recall.
    #[test]
    fn search_matches_enumeration(seed in any::<u64>(), perfect_recall in any::<bool>(), sparse in any::<bool>()) {
        let caps = RandomCaps { max_nature: 3, max_stages: 3, max_actions: 3, max_players: 2, perfect_recall };
        let g = random_game::<f64>(seed, caps).unwrap();
        let part = InfoPartition::compile(&g.game, &g.fine).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let leaf: Vec<f64> = (0..g.game.num_histories())
            .map(|_| if sparse && rng.random_bool(0.6) { 0.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let mut naive = f64::NEG_INFINITY;
        let enumerated = for_each_deterministic(&part, 0, CAP, |choices| {
            naive = naive.max(deterministic_value(&g.game, &part, 0, &leaf, choices));
        });
        prop_assume!(enumerated.is_ok());
        let best = maximize_deterministic(&g.game, &part, 0, &leaf, CAP).unwrap();
        prop_assert!((best.value - naive).abs() < 1e-12, "{} vs {naive}", best.value);
        let realized = deterministic_value(&g.game, &part, 0, &leaf, &best.choices);
        prop_assert!((realized - best.value).abs() < 1e-12);
    }
}
