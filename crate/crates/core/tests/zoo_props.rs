use std::collections::BTreeMap;

use phide_core::cfr::counterfactual_rewards;
use phide_core::hiding::local_reward_vector;
use phide_core::info::is_finer;
use phide_core::measure::expected_reward;
use phide_core::zoo::{random_game, MatchingPennies, RandomCaps, TradeComm};
use phide_core::{BehavioralPolicy, GameDocument, History, InfoPartition};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn argmax(v: &[f64]) -> Option<usize> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // Near-ties are left out: scaling may round either way.
    if sorted.len() > 1 && sorted[0] - sorted[1] < 1e-9 {
        return None;
    }
    v.iter().position(|&x| x == sorted[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matching_pennies_scales_with_its_payoffs(seed in any::<u64>(), c in 0.1f64..10.0, lambda in 0.0f64..2.0) {
        let base = MatchingPennies::default();
        let scaled = MatchingPennies {
            payoff_match: c * base.payoff_match,
            payoff_mismatch: c * base.payoff_mismatch,
            payoff_pass: c * base.payoff_pass,
        };
        let (a, b) = (base.build::<f64>().unwrap(), scaled.build::<f64>().unwrap());
        let coarse = InfoPartition::compile(&a.game, &a.original).unwrap();
        let fine = InfoPartition::compile(&a.game, &a.relaxed).unwrap();
        let policy = BehavioralPolicy::random(&fine, &mut ChaCha8Rng::seed_from_u64(seed));
        let (va, vb) = (expected_reward(&a.game, &fine, &policy, 0), expected_reward(&b.game, &fine, &policy, 0));
        prop_assert!((vb - c * va).abs() < 1e-12);
        for stage in 0..2 {
            for label in 0..fine.num_labels(stage) {
                let ra = counterfactual_rewards(&a.game, &fine, &policy, stage, label).unwrap();
                let rb = counterfactual_rewards(&b.game, &fine, &policy, stage, label).unwrap();
                if let (Some(x), Some(y)) = (argmax(&ra), argmax(&rb)) {
                    prop_assert_eq!(x, y);
                }
                let la = local_reward_vector(&a.game, &coarse, &fine, &policy, lambda, 0, stage, label).unwrap();
                let lb = local_reward_vector(&b.game, &coarse, &fine, &policy, c * lambda, 0, stage, label).unwrap();
                for (x, y) in la.iter().zip(&lb) {
                    prop_assert!((y - c * x).abs() < 1e-10);
                }
                if let (Some(x), Some(y)) = (argmax(&la), argmax(&lb)) {
                    prop_assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn random_games_are_deterministic_and_nested(seed in any::<u64>()) {
        let g = random_game::<f64>(seed, RandomCaps::default()).unwrap();
        let again = random_game::<f64>(seed, RandomCaps::default()).unwrap();
        prop_assert_eq!(&g.game, &again.game);
        prop_assert_eq!(&g.fine, &again.fine);
        let coarse = InfoPartition::compile(&g.game, &g.coarse).unwrap();
        let fine = InfoPartition::compile(&g.game, &g.fine).unwrap();
        prop_assert!(is_finer(&fine, &coarse));
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let g = random_game::<f64>(seed, RandomCaps::default()).unwrap();
        let maps = BTreeMap::from([("coarse".to_string(), g.coarse), ("fine".to_string(), g.fine)]);
        let text = GameDocument::from_game(&g.game, &maps).to_toml().unwrap();
        let (game, back) = GameDocument::from_toml(&text).unwrap().to_game::<f64>().unwrap();
        prop_assert_eq!(game, g.game);
        prop_assert_eq!(back, maps);
    }
}

#[test]
fn trade_comm_is_symmetric_in_the_agents() {
    for (n, m) in [(2, 2), (3, 2), (2, 3)] {
        let tc = TradeComm::new(n, m).build::<f64>().unwrap();
        for (index, h) in tc.game.histories().enumerate() {
            let (s1, s2) = (h.nature / n, h.nature % n);
            let mirrored = History::new(s2 * n + s1, vec![h.actions[1], h.actions[0], h.actions[3], h.actions[2]]);
            let other = tc.game.history_index(&mirrored).unwrap();
            assert_eq!(tc.game.reward(index, 0), tc.game.reward(other, 0), "{h:?}");
        }
    }
}
