//! Exact pushforward distributions and expectations.
//!
//! Everything here is a forward pass (reach probabilities of prefixes) or a backward
//! pass (continuation values) over the mixed-radix prefix levels of the game.

use crate::error::{Error, Result};
use crate::game::{History, PlayerId, ProductGame};
use crate::info::{InfoPartition, InformationMap};
use crate::policy::{BehavioralPolicy, DeterministicProfile};
use crate::scalar::Scalar;

/// Reach probability of every prefix node: `reach[d][node]` for `d = 0..=L`.
pub fn prefix_reach<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
) -> Vec<Vec<S>> {
    let mut reach = Vec::with_capacity(game.num_stages() + 1);
    reach.push(game.nature().iter().map(|s| s.weight).collect::<Vec<_>>());
    for d in 0..game.num_stages() {
        let a = game.actions(d);
        let prev = &reach[d];
        let mut next = vec![S::zero(); prev.len() * a];
        for (node, &w) in prev.iter().enumerate() {
            let row = policy.at(part, d, node);
            for (k, &p) in row.iter().enumerate() {
                next[node * a + k] = w * p;
            }
        }
        reach.push(next);
    }
    reach
}

/// The pushforward distribution over histories, in history index order.
pub fn pushforward<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
) -> Vec<S> {
    prefix_reach(game, part, policy).pop().expect("at least one level")
}

pub fn expectation<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    mut f: impl FnMut(&History) -> S,
) -> S {
    pushforward(game, part, policy)
        .iter()
        .enumerate()
        .filter(|(_, &q)| q != S::zero())
        .fold(S::zero(), |acc, (h, &q)| acc + q * f(&game.history(h)))
}

/// Expected reward of `player`, computed by a backward pass.
pub fn expected_reward<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    player: PlayerId,
) -> S {
    let values = continuation_values(game, part, policy, game.rewards_of(player));
    game.nature()
        .iter()
        .zip(&values[0])
        .fold(S::zero(), |acc, (s, &v)| acc + s.weight * v)
}

/// `V[d][node]`: expected leaf value from prefix `node` on, following `policy`.
pub fn continuation_values<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    leaf: Vec<S>,
) -> Vec<Vec<S>> {
    penalized_values(game, part, policy, leaf, |_, _| None)
}

/// Like [`continuation_values`], but `penalty(d, node)` is subtracted from the value
/// of each prefix at depth `d` for which it returns a value.
pub fn penalized_values<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    leaf: Vec<S>,
    penalty: impl Fn(usize, usize) -> Option<S>,
) -> Vec<Vec<S>> {
    let depth = game.num_stages();
    let mut values = vec![Vec::new(); depth + 1];
    values[depth] = leaf;
    for d in (0..depth).rev() {
        let a = game.actions(d);
        let next = &values[d + 1];
        let level: Vec<S> = (0..game.nodes_at(d))
            .map(|node| {
                let row = policy.at(part, d, node);
                let v = (0..a).fold(S::zero(), |acc, k| acc + row[k] * next[node * a + k]);
                match penalty(d, node) {
                    Some(p) => v - p,
                    None => v,
                }
            })
            .collect();
        values[d] = level;
    }
    values
}

/// All histories of the game, after checking the map reads only the past.
pub fn enumerate_reachable<S: Scalar>(game: &ProductGame<S>, map: &InformationMap) -> Result<Vec<History>> {
    map.validate(game)?;
    Ok(game.histories().collect())
}

/// For each Nature state, the unique history `h` with `h_i = profile(𝒳_i(h))` at every
/// stage. Labels are read from full histories, so maps reading the future are allowed
/// and typically produce no or several fixed points.
pub fn check_well_posed<S: Scalar>(
    game: &ProductGame<S>,
    map: &InformationMap,
    profile: &DeterministicProfile,
) -> Result<Vec<History>> {
    map.validate_shape(game)?;
    let per_nature = game.num_histories() / game.nature().len();
    let mut out = Vec::with_capacity(game.nature().len());
    for omega in 0..game.nature().len() {
        let mut found = None;
        let mut count = 0;
        for index in omega * per_nature..(omega + 1) * per_nature {
            let h = game.history(index);
            let fixed = (0..game.num_stages())
                .all(|i| profile.action(i, map.label(game, i, &h)) == h.actions[i]);
            if fixed {
                count += 1;
                found.get_or_insert(h);
            }
        }
        match (count, found) {
            (1, Some(h)) => out.push(h),
            _ => {
                return Err(Error::WellPosednessViolation {
                    nature: omega,
                    fixed_points: count,
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{NatureState, Stage};
    use crate::info::{Component, StageMap};
    use crate::policy::vertex;

    fn game() -> ProductGame<f64> {
        ProductGame::new(
            vec![NatureState::new(vec![0], 0.3), NatureState::new(vec![1], 0.7)],
            vec![Stage::new(0, 2), Stage::new(0, 3)],
            1,
            |h| vec![(h.nature + 2 * h.actions[0] + h.actions[1]) as f64],
        )
        .unwrap()
    }

    fn map() -> InformationMap {
        InformationMap::reveal(vec![vec![Component::Nature(0)], vec![Component::Action(0)]])
    }

    #[test]
    fn uniform_pushforward_and_expectation() {
        let g = game();
        let part = InfoPartition::compile(&g, &map()).unwrap();
        let mu = BehavioralPolicy::uniform(&part);
        let q = pushforward(&g, &part, &mu);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((q[0] - 0.3 / 6.0).abs() < 1e-15);
        assert!((expectation(&g, &part, &mu, |_| 2.5) - 2.5).abs() < 1e-12);
        let direct: f64 = g
            .histories()
            .enumerate()
            .map(|(i, h)| q[i] * (h.nature + 2 * h.actions[0] + h.actions[1]) as f64)
            .sum();
        assert!((expected_reward(&g, &part, &mu, 0) - direct).abs() < 1e-12);
    }

    #[test]
    fn deterministic_pushforward_matches_fixed_points() {
        let g = game();
        let m = map();
        let part = InfoPartition::compile(&g, &m).unwrap();
        let mu = BehavioralPolicy::from_fn(&part, |i, label| vertex(part.actions(i), (label + i) % part.actions(i)));
        let profile = DeterministicProfile::from_policy(&part, &mu).unwrap();
        let points = check_well_posed(&g, &m, &profile).unwrap();
        let q = pushforward(&g, &part, &mu);
        for (omega, h) in points.iter().enumerate() {
            let idx = g.history_index(h).unwrap();
            assert!((q[idx] - g.nature_weight(omega)).abs() < 1e-15);
        }
        assert_eq!(q.iter().filter(|&&x| x > 0.0).count(), 2);
    }

    #[test]
    fn future_reading_map_breaks_well_posedness() {
        let g = game();
        // Stage 0 sees the action played at stage 1, stage 1 copies its parity back.
        let m = InformationMap::new(vec![
            StageMap::Reveal(vec![Component::Action(1)]),
            StageMap::Reveal(vec![Component::Action(0)]),
        ]);
        assert!(enumerate_reachable(&g, &m).is_err());
        let mut profile = DeterministicProfile::new();
        let h = |a0, a1| History::new(0, vec![a0, a1]);
        for a1 in 0..3 {
            profile.set(0, m.label(&g, 0, &h(0, a1)), a1 % 2);
        }
        for a0 in 0..2 {
            profile.set(1, m.label(&g, 1, &h(a0, 0)), a0);
        }
        let err = check_well_posed(&g, &m, &profile).unwrap_err();
        assert!(matches!(err, Error::WellPosednessViolation { fixed_points: 2, .. }));
    }

    #[test]
    fn single_stage_single_action_has_one_history_per_state() {
        let g = ProductGame::<f64>::new(
            vec![NatureState::new(vec![0], 0.5), NatureState::new(vec![1], 0.5)],
            vec![Stage::new(0, 1)],
            1,
            |_| vec![1.0],
        )
        .unwrap();
        let m = InformationMap::reveal(vec![vec![]]);
        assert_eq!(enumerate_reachable(&g, &m).unwrap().len(), 2);
    }
}
