use phide_core::info::has_perfect_recall;
use phide_core::projection::is_implementable;
use phide_core::zoo::{random_game, RandomCaps};
use phide_core::{rir_run, BehavioralPolicy, InfoPartition, Projector, ProxMode, RelaxationProblem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn perfect_recall_caps() -> RandomCaps {
    RandomCaps {
        perfect_recall: true,
        ..RandomCaps::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lagrangian_never_decreases(seed in any::<u64>(), lambda in prop::sample::select(vec![0.05, 0.5, 5.0])) {
        let g = random_game::<f64>(seed, perfect_recall_caps()).unwrap();
        let coarse = InfoPartition::compile(&g.game, &g.coarse).unwrap();
        let fine = InfoPartition::compile(&g.game, &g.fine).unwrap();
        prop_assert!(has_perfect_recall(&g.game, &fine, 0));
        let problem = RelaxationProblem::new(&g.game, &coarse, &fine, 0, lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = BehavioralPolicy::random(&fine, &mut rng);
        let out = rir_run(&problem, &init, 10, ProxMode::BackwardInduction).unwrap();
        for w in out.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{} then {}", w[0], w[1]);
        }
        let base = BehavioralPolicy::uniform(&fine);
        let lifted = Projector::new(&g.game, &coarse, &fine, &base).lift(&out.projected);
        prop_assert!(is_implementable(&coarse, &fine, &lifted));
    }

    #[test]
    fn proximal_step_beats_the_lifted_target(seed in any::<u64>(), lambda in 0.01f64..10.0, coordinate in any::<bool>()) {
        let g = random_game::<f64>(seed, RandomCaps { perfect_recall: !coordinate, ..RandomCaps::default() }).unwrap();
        let coarse = InfoPartition::compile(&g.game, &g.coarse).unwrap();
        let fine = InfoPartition::compile(&g.game, &g.fine).unwrap();
        let problem = RelaxationProblem::new(&g.game, &coarse, &fine, 0, lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = BehavioralPolicy::random(&fine, &mut rng);
        let gamma = problem.project(&start).unwrap();
        let mode = if coordinate { ProxMode::CoordinateAscent } else { ProxMode::BackwardInduction };
        let step = problem.proximal_step(&gamma, &start, mode).unwrap();
        // The player's stages follow the lifted target; other stages keep `start`.
        let lift = Projector::new(&g.game, &coarse, &fine, &BehavioralPolicy::uniform(&fine)).lift(&gamma);
        let lifted = BehavioralPolicy::from_fn(&fine, |i, l| {
            if g.game.player_of(i) == 0 { lift.row(i, l).to_vec() } else { start.row(i, l).to_vec() }
        });
        prop_assert!(step.objective >= problem.proximal_objective(&lifted, &gamma) - 1e-12);
        prop_assert!(step.objective >= problem.proximal_objective(&start, &gamma) - 1e-12);
    }
}
