//! Finite games in product form.
//!
//! A game is played over the product set `Ω × [A_0] × … × [A_{L-1}]`: Nature draws a
//! state once, then each stage contributes one action. Legal action counts are fixed
//! per stage, so every element of the product is a reachable history and histories
//! can be addressed by a mixed-radix index. The same indexing gives every prefix
//! `(ω, a_0, …, a_{d-1})` a dense id at depth `d`, which is what the reach and value
//! passes in [`crate::measure`] iterate over.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type PlayerId = usize;

/// One state of Nature: its observable coordinates and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct NatureState<S> {
    pub coords: Vec<usize>,
    pub weight: S,
}

impl<S> NatureState<S> {
    pub fn new(coords: Vec<usize>, weight: S) -> Self {
        Self { coords, weight }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stage {
    pub player: PlayerId,
    pub actions: usize,
}

impl Stage {
    pub fn new(player: PlayerId, actions: usize) -> Self {
        Self { player, actions }
    }
}

/// An element of the product set. Actions are zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    pub nature: usize,
    pub actions: Vec<usize>,
}

impl History {
    pub fn new(nature: usize, actions: Vec<usize>) -> Self {
        Self { nature, actions }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductGame<S> {
    nature: Vec<NatureState<S>>,
    stages: Vec<Stage>,
    num_players: usize,
    /// Row-major `[history][player]`.
    rewards: Vec<S>,
    /// Number of prefix nodes at each depth `0..=L`.
    level_sizes: Vec<usize>,
    max_abs_reward: S,
}

/// Upper bound on the product set size; enumeration beyond this is not meaningful here.
const MAX_HISTORIES: usize = 1 << 24;

impl<S: Scalar> ProductGame<S> {
    /// Builds a game, evaluating `reward` once per history.
    pub fn new(
        nature: Vec<NatureState<S>>,
        stages: Vec<Stage>,
        num_players: usize,
        mut reward: impl FnMut(&History) -> Vec<S>,
    ) -> Result<Self> {
        let level_sizes = validate_shape(&nature, &stages, num_players)?;
        let total = level_sizes[stages.len()];
        let mut rewards = Vec::with_capacity(total * num_players);
        let mut history = History::new(0, vec![0; stages.len()]);
        for index in 0..total {
            decode(&stages, &level_sizes, index, &mut history);
            let values = reward(&history);
            if values.len() != num_players {
                return Err(Error::InvalidGame(format!(
                    "reward for history {index} has {} entries, expected {num_players}",
                    values.len()
                )));
            }
            rewards.extend(values);
        }
        Self::assemble(nature, stages, num_players, rewards, level_sizes)
    }

    /// Builds a game from a row-major `[history][player]` reward table.
    pub fn from_reward_table(
        nature: Vec<NatureState<S>>,
        stages: Vec<Stage>,
        num_players: usize,
        rewards: Vec<S>,
    ) -> Result<Self> {
        let level_sizes = validate_shape(&nature, &stages, num_players)?;
        let expected = level_sizes[stages.len()] * num_players;
        if rewards.len() != expected {
            return Err(Error::InvalidGame(format!(
                "reward table has {} entries, expected {expected}",
                rewards.len()
            )));
        }
        Self::assemble(nature, stages, num_players, rewards, level_sizes)
    }

    fn assemble(
        nature: Vec<NatureState<S>>,
        stages: Vec<Stage>,
        num_players: usize,
        rewards: Vec<S>,
        level_sizes: Vec<usize>,
    ) -> Result<Self> {
        let mut max_abs_reward = S::zero();
        for (i, r) in rewards.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite(format!(
                    "reward of history {} for player {}",
                    i / num_players,
                    i % num_players
                )));
            }
            max_abs_reward = max_abs_reward.max(r.abs());
        }
        Ok(Self {
            nature,
            stages,
            num_players,
            rewards,
            level_sizes,
            max_abs_reward,
        })
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn stage(&self, i: usize) -> Stage {
        self.stages[i]
    }

    pub fn actions(&self, i: usize) -> usize {
        self.stages[i].actions
    }

    /// W: the largest legal action count over all stages.
    pub fn max_actions(&self) -> usize {
        self.stages.iter().map(|s| s.actions).max().unwrap_or(0)
    }

    pub fn player_of(&self, i: usize) -> PlayerId {
        self.stages[i].player
    }

    /// `I_p`: the stages owned by `player`, in increasing order.
    pub fn stages_of(&self, player: PlayerId) -> Vec<usize> {
        (0..self.stages.len())
            .filter(|&i| self.stages[i].player == player)
            .collect()
    }

    pub fn nature(&self) -> &[NatureState<S>] {
        &self.nature
    }

    pub fn nature_weight(&self, omega: usize) -> S {
        self.nature[omega].weight
    }

    pub fn num_histories(&self) -> usize {
        self.level_sizes[self.stages.len()]
    }

    /// Number of prefix nodes `(ω, a_0..a_{depth-1})` at `depth`.
    pub fn nodes_at(&self, depth: usize) -> usize {
        self.level_sizes[depth]
    }

    /// Prefix node reached from `node` (at `depth`) by playing `action` at stage `depth`.
    #[inline]
    pub fn child(&self, depth: usize, node: usize, action: usize) -> usize {
        node * self.stages[depth].actions + action
    }

    /// Parent node and the action played at stage `depth - 1`.
    #[inline]
    pub fn parent(&self, depth: usize, node: usize) -> (usize, usize) {
        let a = self.stages[depth - 1].actions;
        (node / a, node % a)
    }

    /// Nature index of a prefix node.
    #[inline]
    pub fn nature_of(&self, depth: usize, node: usize) -> usize {
        node / (self.level_sizes[depth] / self.level_sizes[0])
    }

    /// Ancestor of `node` (at `depth`) at the shallower depth `target`.
    pub fn ancestor(&self, depth: usize, node: usize, target: usize) -> usize {
        let mut n = node;
        for d in (target + 1..=depth).rev() {
            n /= self.stages[d - 1].actions;
        }
        n
    }

    /// Leaf index of `history`, or `None` if an action is out of range.
    pub fn history_index(&self, history: &History) -> Option<usize> {
        if history.nature >= self.nature.len() || history.actions.len() != self.stages.len() {
            return None;
        }
        let mut index = history.nature;
        for (stage, &a) in self.stages.iter().zip(&history.actions) {
            if a >= stage.actions {
                return None;
            }
            index = index * stage.actions + a;
        }
        Some(index)
    }

    pub fn history(&self, index: usize) -> History {
        let mut h = History::new(0, vec![0; self.stages.len()]);
        decode(&self.stages, &self.level_sizes, index, &mut h);
        h
    }

    /// Nature index and the actions of a prefix node.
    pub fn prefix(&self, depth: usize, node: usize) -> (usize, Vec<usize>) {
        let mut actions = vec![0; depth];
        let mut n = node;
        for d in (0..depth).rev() {
            let a = self.stages[d].actions;
            actions[d] = n % a;
            n /= a;
        }
        (n, actions)
    }

    /// All histories in lexicographic order of `(nature, a_0, …, a_{L-1})`.
    pub fn histories(&self) -> impl Iterator<Item = History> + '_ {
        (0..self.num_histories()).map(|i| self.history(i))
    }

    pub fn reward(&self, history: usize, player: PlayerId) -> S {
        self.rewards[history * self.num_players + player]
    }

    /// Reward of `player` for every history, in index order.
    pub fn rewards_of(&self, player: PlayerId) -> Vec<S> {
        self.rewards
            .iter()
            .skip(player)
            .step_by(self.num_players)
            .copied()
            .collect()
    }

    pub fn reward_table(&self) -> &[S] {
        &self.rewards
    }

    /// ‖r‖_∞ over the reachable set.
    pub fn max_abs_reward(&self) -> S {
        self.max_abs_reward
    }

    pub fn min_reward(&self) -> S {
        self.rewards.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn max_reward(&self) -> S {
        self.rewards.iter().copied().fold(S::neg_infinity(), S::max)
    }
}

fn validate_shape<S: Scalar>(
    nature: &[NatureState<S>],
    stages: &[Stage],
    num_players: usize,
) -> Result<Vec<usize>> {
    if nature.is_empty() {
        return Err(Error::InvalidGame("Nature has no states".into()));
    }
    if stages.is_empty() {
        return Err(Error::InvalidGame("a game needs at least one stage".into()));
    }
    if num_players == 0 {
        return Err(Error::InvalidGame("a game needs at least one player".into()));
    }
    let mut total = S::zero();
    for (k, state) in nature.iter().enumerate() {
        let w = state.weight;
        if !w.is_finite() || w < S::zero() || w > S::one() {
            return Err(Error::InvalidGame(format!(
                "Nature weight {w} of state {k} is outside [0, 1]"
            )));
        }
        total = total + w;
    }
    if (total - S::one()).abs() > S::mass_tolerance() {
        return Err(Error::InvalidGame(format!(
            "Nature weights sum to {total}, expected 1"
        )));
    }
    let mut sizes = Vec::with_capacity(stages.len() + 1);
    sizes.push(nature.len());
    for (i, stage) in stages.iter().enumerate() {
        if stage.actions == 0 {
            return Err(Error::InvalidGame(format!("stage {i} has no legal action")));
        }
        if stage.player >= num_players {
            return Err(Error::InvalidGame(format!(
                "stage {i} belongs to player {} but the game has {num_players}",
                stage.player
            )));
        }
        let next = sizes[i] * stage.actions;
        if next > MAX_HISTORIES {
            return Err(Error::InvalidGame(format!(
                "product set exceeds {MAX_HISTORIES} histories"
            )));
        }
        sizes.push(next);
    }
    Ok(sizes)
}

fn decode(stages: &[Stage], level_sizes: &[usize], index: usize, out: &mut History) {
    debug_assert!(index < level_sizes[stages.len()]);
    let mut n = index;
    for d in (0..stages.len()).rev() {
        let a = stages[d].actions;
        out.actions[d] = n % a;
        n /= a;
    }
    out.nature = n;
}
