//! Exact maximization over deterministic policies of one player.
//!
//! The objective is `Σ_h [h agrees with μ_p at every stage of p] · v(h)` for a fixed
//! leaf weighting `v` (for a best response, `v = ℙ · π_{-p} · r_p`). Instead of
//! enumerating every deterministic policy, the search
//!
//! * drops histories with `v(h) = 0`, which cannot change the objective,
//! * splits the remaining histories into groups that share no decision slot and
//!   solves each group on its own,
//! * branches on the slots of the earliest remaining stage, trying only the actions
//!   that some remaining history takes there plus one action that none takes,
//! * settles the last stage by a best response per label.
//!
//! Under perfect recall this collapses to backward induction; without it the search
//! stays exact but may branch a lot, which [`DEFAULT_ASSIGNMENT_CAP`] bounds.

use crate::error::{Error, Result};
use crate::game::{PlayerId, ProductGame};
use crate::info::InfoPartition;
use crate::policy::{vertex, BehavioralPolicy};
use crate::scalar::Scalar;

pub const DEFAULT_ASSIGNMENT_CAP: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutcome<S> {
    pub value: S,
    /// `choices[stage][label]`, filled for the player's stages and empty elsewhere.
    pub choices: Vec<Vec<usize>>,
    /// Number of candidate slot assignments examined.
    pub assignments: u64,
}

impl<S: Scalar> OracleOutcome<S> {
    /// `template` with the player's stages replaced by the optimal deterministic rows.
    pub fn to_policy(&self, part: &InfoPartition, template: &BehavioralPolicy<S>) -> BehavioralPolicy<S> {
        BehavioralPolicy::from_fn(part, |i, g| {
            if self.choices[i].is_empty() {
                template.row(i, g).to_vec()
            } else {
                vertex(part.actions(i), self.choices[i][g])
            }
        })
    }
}

struct Search<'a, S> {
    /// `slot_of[h][k]`: slot of history `h` at the player's `k`-th stage.
    slot_of: Vec<Vec<usize>>,
    /// `action_of[h][k]`: action of history `h` at the player's `k`-th stage.
    action_of: Vec<Vec<usize>>,
    slot_actions: Vec<usize>,
    value: &'a [S],
    cap: u64,
    assignments: u64,
}

/// Maximizes the objective described in the module docs.
pub fn maximize_deterministic<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    player: PlayerId,
    leaf_value: &[S],
    cap: u64,
) -> Result<OracleOutcome<S>> {
    if leaf_value.len() != game.num_histories() {
        return Err(Error::InvalidParameter(format!(
            "leaf values have length {}, expected {}",
            leaf_value.len(),
            game.num_histories()
        )));
    }
    let own = game.stages_of(player);
    let mut offsets = Vec::with_capacity(own.len());
    let mut slot_actions = Vec::new();
    for &i in &own {
        offsets.push(slot_actions.len());
        slot_actions.extend(std::iter::repeat_n(part.actions(i), part.num_labels(i)));
    }
    let depth = game.num_stages();
    let active: Vec<usize> = (0..game.num_histories())
        .filter(|&h| leaf_value[h] != S::zero())
        .collect();
    let mut slot_of = vec![Vec::new(); game.num_histories()];
    let mut action_of = vec![Vec::new(); game.num_histories()];
    for &h in &active {
        for (k, &i) in own.iter().enumerate() {
            let node = game.ancestor(depth, h, i + 1);
            let (prefix, action) = game.parent(i + 1, node);
            slot_of[h].push(offsets[k] + part.label_of(i, prefix));
            action_of[h].push(action);
        }
    }
    let mut search = Search {
        slot_of,
        action_of,
        slot_actions,
        value: leaf_value,
        cap,
        assignments: 0,
    };
    let (value, picks) = search.solve(&active, 0, own.len())?;

    let mut choices = vec![Vec::new(); game.num_stages()];
    for &i in &own {
        choices[i] = vec![0; part.num_labels(i)];
    }
    for (slot, action) in picks {
        let k = offsets.partition_point(|&o| o <= slot) - 1;
        choices[own[k]][slot - offsets[k]] = action;
    }
    Ok(OracleOutcome {
        value,
        choices,
        assignments: search.assignments,
    })
}

impl<S: Scalar> Search<'_, S> {
    /// Best value over histories `hs` at the player's stages `k..end`.
    fn solve(&mut self, hs: &[usize], k: usize, end: usize) -> Result<(S, Vec<(usize, usize)>)> {
        if hs.is_empty() {
            return Ok((S::zero(), Vec::new()));
        }
        if k == end {
            return Ok((hs.iter().fold(S::zero(), |acc, &h| acc + self.value[h]), Vec::new()));
        }
        let mut total = S::zero();
        let mut picks = Vec::new();
        for group in self.components(hs, k, end) {
            let (v, p) = if k + 1 == end {
                self.best_response(&group, k)
            } else {
                self.branch(&group, k, end)?
            };
            total = total + v;
            picks.extend(p);
        }
        Ok((total, picks))
    }

    /// Groups of histories that share no slot at stages `k..end`, in first-appearance order.
    fn components(&self, hs: &[usize], k: usize, end: usize) -> Vec<Vec<usize>> {
        let mut parent: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        fn find(parent: &mut std::collections::HashMap<usize, usize>, x: usize) -> usize {
            let mut root = x;
            while let Some(&p) = parent.get(&root) {
                if p == root {
                    break;
                }
                root = p;
            }
            let mut cur = x;
            while cur != root {
                let next = parent[&cur];
                parent.insert(cur, root);
                cur = next;
            }
            root
        }
        for &h in hs {
            let slots = &self.slot_of[h][k..end];
            parent.entry(slots[0]).or_insert(slots[0]);
            let mut a = find(&mut parent, slots[0]);
            for &s in &slots[1..] {
                parent.entry(s).or_insert(s);
                let b = find(&mut parent, s);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent.insert(hi, lo);
                    a = lo;
                }
            }
        }
        let mut index: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &h in hs {
            let root = find(&mut parent, self.slot_of[h][k]);
            let g = *index.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(h);
        }
        groups
    }

    fn best_response(&mut self, hs: &[usize], k: usize) -> (S, Vec<(usize, usize)>) {
        let mut sums: Vec<(usize, Vec<S>)> = Vec::new();
        for &h in hs {
            let slot = self.slot_of[h][k];
            let pos = match sums.iter().position(|(s, _)| *s == slot) {
                Some(p) => p,
                None => {
                    sums.push((slot, vec![S::zero(); self.slot_actions[slot]]));
                    sums.len() - 1
                }
            };
            let a = self.action_of[h][k];
            sums[pos].1[a] = sums[pos].1[a] + self.value[h];
        }
        self.assignments += sums.len() as u64;
        let mut total = S::zero();
        let mut picks = Vec::with_capacity(sums.len());
        for (slot, values) in sums {
            let (best, v) = argmax(&values);
            total = total + v;
            picks.push((slot, best));
        }
        (total, picks)
    }

    fn branch(&mut self, hs: &[usize], k: usize, end: usize) -> Result<(S, Vec<(usize, usize)>)> {
        // Candidate actions per slot at this stage: every action taken by some history,
        // plus the smallest action taken by none (which discards all of them).
        let mut slots: Vec<usize> = Vec::new();
        let mut options: Vec<Vec<usize>> = Vec::new();
        for &h in hs {
            let slot = self.slot_of[h][k];
            let pos = match slots.iter().position(|&s| s == slot) {
                Some(p) => p,
                None => {
                    slots.push(slot);
                    options.push(Vec::new());
                    slots.len() - 1
                }
            };
            let a = self.action_of[h][k];
            if !options[pos].contains(&a) {
                options[pos].push(a);
            }
        }
        for (pos, opts) in options.iter_mut().enumerate() {
            opts.sort_unstable();
            if let Some(free) = (0..self.slot_actions[slots[pos]]).find(|a| !opts.contains(a)) {
                opts.push(free);
            }
        }
        let combos = options
            .iter()
            .try_fold(1u64, |acc, o| acc.checked_mul(o.len() as u64))
            .unwrap_or(u64::MAX);
        if self.assignments.saturating_add(combos) > self.cap {
            return Err(Error::EnumerationTooLarge { cap: self.cap });
        }

        let mut digits = vec![0usize; slots.len()];
        let mut best: Option<(S, Vec<(usize, usize)>)> = None;
        let mut kept = Vec::with_capacity(hs.len());
        loop {
            self.assignments += 1;
            if self.assignments > self.cap {
                return Err(Error::EnumerationTooLarge { cap: self.cap });
            }
            kept.clear();
            kept.extend(hs.iter().copied().filter(|&h| {
                let pos = slots.iter().position(|&s| s == self.slot_of[h][k]).expect("slot listed");
                options[pos][digits[pos]] == self.action_of[h][k]
            }));
            let (v, mut p) = self.solve(&kept, k + 1, end)?;
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                p.extend(slots.iter().enumerate().map(|(pos, &s)| (s, options[pos][digits[pos]])));
                best = Some((v, p));
            }
            // Odometer over the option lists.
            let mut carry = true;
            for pos in (0..digits.len()).rev() {
                digits[pos] += 1;
                if digits[pos] < options[pos].len() {
                    carry = false;
                    break;
                }
                digits[pos] = 0;
            }
            if carry {
                break;
            }
        }
        Ok(best.expect("at least one assignment"))
    }
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax<S: Scalar>(values: &[S]) -> (usize, S) {
    let mut best = (0, values[0]);
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

/// `ℙ(ω) · ∏_{i ∉ I_p} μ_i(h)` for every history: the weight others put on `h`.
pub fn others_weight<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    player: PlayerId,
) -> Vec<S> {
    let mut level: Vec<S> = game.nature().iter().map(|s| s.weight).collect();
    for d in 0..game.num_stages() {
        let a = game.actions(d);
        let own = game.player_of(d) == player;
        let mut next = vec![S::zero(); level.len() * a];
        for (node, &w) in level.iter().enumerate() {
            let row = policy.at(part, d, node);
            for k in 0..a {
                next[node * a + k] = if own { w } else { w * row[k] };
            }
        }
        level = next;
    }
    level
}

/// Best expected reward `player` can get against the other stages of `policy`,
/// over deterministic policies keyed by `part`.
pub fn best_response<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    player: PlayerId,
    policy: &BehavioralPolicy<S>,
    cap: u64,
) -> Result<OracleOutcome<S>> {
    let weight = others_weight(game, part, policy, player);
    let leaf: Vec<S> = weight
        .iter()
        .enumerate()
        .map(|(h, &w)| w * game.reward(h, player))
        .collect();
    maximize_deterministic(game, part, player, &leaf, cap)
}

pub fn best_response_value<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    player: PlayerId,
    policy: &BehavioralPolicy<S>,
) -> Result<S> {
    Ok(best_response(game, part, player, policy, DEFAULT_ASSIGNMENT_CAP)?.value)
}

/// Objective of a fixed deterministic choice of the player's rows.
pub fn deterministic_value<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    player: PlayerId,
    leaf_value: &[S],
    choices: &[Vec<usize>],
) -> S {
    let own = game.stages_of(player);
    let depth = game.num_stages();
    let mut total = S::zero();
    for (h, &v) in leaf_value.iter().enumerate() {
        let agrees = own.iter().all(|&i| {
            let node = game.ancestor(depth, h, i + 1);
            let (prefix, action) = game.parent(i + 1, node);
            choices[i][part.label_of(i, prefix)] == action
        });
        if agrees {
            total = total + v;
        }
    }
    total
}

/// Calls `visit` with every deterministic choice of the player's rows (other stages
/// empty), refusing if there are more than `cap` of them.
pub fn for_each_deterministic(
    part: &InfoPartition,
    player: PlayerId,
    cap: u64,
    mut visit: impl FnMut(&[Vec<usize>]),
) -> Result<()> {
    let own: Vec<usize> = (0..part.num_stages()).filter(|&i| part.player_of(i) == player).collect();
    let mut radices = Vec::new();
    for &i in &own {
        radices.extend(std::iter::repeat_n(part.actions(i), part.num_labels(i)));
    }
    let count = radices
        .iter()
        .try_fold(1u64, |acc, &r| acc.checked_mul(r as u64))
        .unwrap_or(u64::MAX);
    if count > cap {
        return Err(Error::EnumerationTooLarge { cap });
    }
    let mut choices: Vec<Vec<usize>> = (0..part.num_stages())
        .map(|i| if own.contains(&i) { vec![0; part.num_labels(i)] } else { Vec::new() })
        .collect();
    let mut digits = vec![0usize; radices.len()];
    loop {
        let mut pos = 0;
        for &i in &own {
            for g in 0..part.num_labels(i) {
                choices[i][g] = digits[pos];
                pos += 1;
            }
        }
        visit(&choices);
        let mut carry = true;
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < radices[pos] {
                carry = false;
                break;
            }
            digits[pos] = 0;
        }
        if carry {
            return Ok(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::expected_reward;
    use crate::zoo::{MatchingPennies, TradeComm};

    fn part<S: Scalar>(g: &ProductGame<S>, m: &crate::info::InformationMap) -> InfoPartition {
        InfoPartition::compile(g, m).unwrap()
    }

    #[test]
    fn matching_pennies_optimum_is_one() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let x = part(&mp.game, &mp.original);
        let uniform = BehavioralPolicy::uniform(&x);
        let out = best_response(&mp.game, &x, 0, &uniform, DEFAULT_ASSIGNMENT_CAP).unwrap();
        assert_eq!(out.value, 1.0);
        let policy = out.to_policy(&x, &uniform);
        assert_eq!(expected_reward(&mp.game, &x, &policy, 0), 1.0);
    }

    #[test]
    fn trade_comm_optimum_is_one() {
        let tc = TradeComm::new(2, 2).build::<f64>().unwrap();
        let x = part(&tc.game, &tc.original);
        let v = best_response_value(&tc.game, &x, 0, &BehavioralPolicy::uniform(&x)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn search_agrees_with_naive_enumeration_on_signed_values() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        for map in [&mp.original, &mp.relaxed] {
            let x = part(&mp.game, map);
            let leaf: Vec<f64> = (0..12).map(|h| ((h * 7 % 5) as f64 - 2.0) / 3.0).collect();
            let out = maximize_deterministic(&mp.game, &x, 0, &leaf, DEFAULT_ASSIGNMENT_CAP).unwrap();
            let mut best = f64::NEG_INFINITY;
            let mut count = 0;
            for_each_deterministic(&x, 0, 1000, |c| {
                count += 1;
                best = best.max(deterministic_value(&mp.game, &x, 0, &leaf, c));
            })
            .unwrap();
            assert!((out.value - best).abs() < 1e-12);
            assert!((deterministic_value(&mp.game, &x, 0, &leaf, &out.choices) - best).abs() < 1e-12);
            assert!(count == 2 * 2 * 9 || count == 4 * 81);
        }
    }

    #[test]
    fn caps_are_enforced() {
        let tc = TradeComm::new(2, 2).build::<f64>().unwrap();
        let x = part(&tc.game, &tc.original);
        assert!(matches!(
            for_each_deterministic(&x, 0, 1_000_000, |_| {}),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let leaf = vec![1.0; tc.game.num_histories()];
        assert!(matches!(
            maximize_deterministic(&tc.game, &x, 0, &leaf, 10),
            Err(Error::EnumerationTooLarge { cap: 10 })
        ));
    }
}
