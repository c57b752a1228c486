//! Built-in games: Trade Comm, Cooperative Matching Pennies and random small games.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{NatureState, ProductGame, Stage};
use crate::info::{Component, InfoPartition, InformationMap, Label, StageMap};
use crate::scalar::Scalar;

use Component::{Action, Nature};

/// Two players each hold one of `n` items, exchange one message out of `m` each way,
/// then both request a trade. Stage order: message 1, message 2, request 1, request 2.
/// A request is an action `a` in `[n²]` standing for the pair `(a / n, a % n)` of
/// (item given, item received).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TradeComm {
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug)]
pub struct TradeCommGame<S> {
    pub game: ProductGame<S>,
    pub original: InformationMap,
    /// Sees both items but forgets its own messages.
    pub cheat: InformationMap,
    /// Sees everything that happened before, which restores perfect recall.
    pub perfect_recall: InformationMap,
}

impl TradeComm {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn build<S: Scalar>(&self) -> Result<TradeCommGame<S>> {
        let (n, m) = (self.n, self.m);
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "trade comm needs n, m >= 1 (got n={n}, m={m})"
            )));
        }
        let weight = S::one() / S::of_usize(n * n);
        let nature = (0..n * n)
            .map(|k| NatureState::new(vec![k / n, k % n], weight))
            .collect();
        let stages = vec![
            Stage::new(0, m),
            Stage::new(0, m),
            Stage::new(0, n * n),
            Stage::new(0, n * n),
        ];
        let game = ProductGame::new(nature, stages, 1, |h| {
            let (s1, s2) = (h.nature / n, h.nature % n);
            let (give1, get1) = (h.actions[2] / n, h.actions[2] % n);
            let (give2, get2) = (h.actions[3] / n, h.actions[3] % n);
            let ok = give1 == s1 && get2 == s1 && give2 == s2 && get1 == s2;
            vec![if ok { S::one() } else { S::zero() }]
        })?;
        Ok(TradeCommGame {
            game,
            original: InformationMap::reveal(vec![
                vec![Nature(0)],
                vec![Nature(1)],
                vec![Nature(0), Action(0), Action(1)],
                vec![Nature(1), Action(1), Action(0)],
            ]),
            cheat: InformationMap::reveal(vec![
                vec![Nature(0), Nature(1)],
                vec![Nature(1), Nature(0)],
                vec![Nature(0), Nature(1), Action(1)],
                vec![Nature(1), Nature(0), Action(0)],
            ]),
            perfect_recall: InformationMap::reveal(vec![
                vec![Nature(0)],
                vec![Nature(0), Nature(1), Action(0)],
                vec![Nature(0), Nature(1), Action(0), Action(1)],
                vec![Nature(0), Nature(1), Action(0), Action(1), Action(2)],
            ]),
        })
    }
}

/// Nature picks SAME or DIFFERENT; Alice sees it and shows a coin; Bob sees only the
/// coin and answers HEAD, TAIL or PASS. Both stages belong to the one team player.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingPennies {
    pub payoff_match: f64,
    pub payoff_mismatch: f64,
    pub payoff_pass: f64,
}

impl Default for MatchingPennies {
    fn default() -> Self {
        Self {
            payoff_match: 1.0,
            payoff_mismatch: 0.0,
            payoff_pass: 0.6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchingPenniesGame<S> {
    pub game: ProductGame<S>,
    pub original: InformationMap,
    /// Bob also sees Nature.
    pub relaxed: InformationMap,
}

pub const SAME: usize = 0;
pub const DIFFERENT: usize = 1;
pub const HEAD: usize = 0;
pub const TAIL: usize = 1;
pub const PASS: usize = 2;

impl MatchingPennies {
    pub fn build<S: Scalar>(&self) -> Result<MatchingPenniesGame<S>> {
        if !(self.payoff_mismatch < self.payoff_pass && self.payoff_pass < self.payoff_match) {
            return Err(Error::InvalidParameter(format!(
                "payoffs must satisfy mismatch < pass < match (got {}, {}, {})",
                self.payoff_mismatch, self.payoff_pass, self.payoff_match
            )));
        }
        let half = S::of(0.5);
        let nature = vec![
            NatureState::new(vec![SAME], half),
            NatureState::new(vec![DIFFERENT], half),
        ];
        let stages = vec![Stage::new(0, 2), Stage::new(0, 3)];
        let spec = *self;
        let game = ProductGame::new(nature, stages, 1, move |h| {
            let (alice, bob) = (h.actions[0], h.actions[1]);
            let value = if bob == PASS {
                spec.payoff_pass
            } else if (bob == alice) == (h.nature == SAME) {
                spec.payoff_match
            } else {
                spec.payoff_mismatch
            };
            vec![S::of(value)]
        })?;
        Ok(MatchingPenniesGame {
            game,
            original: InformationMap::reveal(vec![vec![Nature(0)], vec![Action(0)]]),
            relaxed: InformationMap::reveal(vec![vec![Nature(0)], vec![Nature(0), Action(0)]]),
        })
    }
}

/// Size limits for [`random_game`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomCaps {
    pub max_nature: usize,
    pub max_stages: usize,
    pub max_actions: usize,
    pub max_players: usize,
    /// Make the fine map give every player perfect recall.
    pub perfect_recall: bool,
}

impl Default for RandomCaps {
    fn default() -> Self {
        Self {
            max_nature: 4,
            max_stages: 4,
            max_actions: 3,
            max_players: 2,
            perfect_recall: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomGame<S> {
    pub game: ProductGame<S>,
    pub coarse: InformationMap,
    /// Finer than `coarse` by construction.
    pub fine: InformationMap,
}

/// A random game with a fine map and a coarse map obtained by merging fine labels.
/// Deterministic given `seed`.
pub fn random_game<S: Scalar>(seed: u64, caps: RandomCaps) -> Result<RandomGame<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = rng.random_range(1..=caps.max_nature.max(1));
    let stages_n = rng.random_range(1..=caps.max_stages.max(1));
    let players = rng.random_range(1..=caps.max_players.max(1));

    let draws: Vec<f64> = (0..omega).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = draws.iter().sum();
    let nature = (0..omega)
        .map(|k| NatureState::new(vec![k, k % 2], S::of(draws[k] / total)))
        .collect();
    let stages: Vec<Stage> = (0..stages_n)
        .map(|_| {
            Stage::new(
                rng.random_range(0..players),
                rng.random_range(1..=caps.max_actions.max(1)),
            )
        })
        .collect();
    let rewards: Vec<S> = {
        let count: usize = omega * stages.iter().map(|s| s.actions).product::<usize>() * players;
        (0..count).map(|_| S::of(rng.random_range(-1.0..=1.0))).collect()
    };
    let game = ProductGame::from_reward_table(nature, stages.clone(), players, rewards)?;

    let mut reveals: Vec<Vec<Component>> = (0..stages_n)
        .map(|i| {
            let mut pool = vec![Nature(0), Nature(1)];
            pool.extend((0..i).map(Action));
            pool.into_iter().filter(|_| rng.random_bool(0.5)).collect()
        })
        .collect();
    let fine = if caps.perfect_recall {
        for j in 0..stages_n {
            for i in 0..j {
                if stages[i].player == stages[j].player {
                    let mut extra = reveals[i].clone();
                    extra.push(Action(i));
                    for c in extra {
                        if !reveals[j].contains(&c) {
                            reveals[j].push(c);
                        }
                    }
                }
            }
        }
        InformationMap::reveal(reveals)
    } else {
        let stage_maps = reveals
            .into_iter()
            .enumerate()
            .map(|(i, components)| {
                if rng.random_bool(0.3) {
                    let buckets = rng.random_range(1..=game.nodes_at(i));
                    StageMap::Table(
                        (0..game.nodes_at(i))
                            .map(|_| Label(rng.random_range(0..buckets) as u64))
                            .collect(),
                    )
                } else {
                    StageMap::Reveal(components)
                }
            })
            .collect();
        InformationMap::new(stage_maps)
    };

    let part = InfoPartition::compile(&game, &fine)?;
    let coarse_stages = (0..stages_n)
        .map(|i| {
            let labels = part.num_labels(i);
            let buckets = rng.random_range(1..=labels);
            let mut bucket_of: Vec<usize> = (0..labels).map(|f| f % buckets).collect();
            bucket_of.shuffle(&mut rng);
            StageMap::Table(
                part.node_label[i]
                    .iter()
                    .map(|&f| Label(bucket_of[f] as u64))
                    .collect(),
            )
        })
        .collect();
    Ok(RandomGame {
        game,
        coarse: InformationMap::new(coarse_stages),
        fine,
    })
}
