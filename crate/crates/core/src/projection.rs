//! The projector onto implementable policies and the reweighted distance.
//!
//! A policy keyed by a fine map is projected onto a coarse map by averaging, within
//! each coarse label, the fine rows it covers, weighted by how likely the base profile
//! makes each prefix. When a coarse label covers a single fine label the row is copied
//! as is, so projecting an already implementable policy is exact to the bit.

use crate::error::{Error, Result};
use crate::game::{PlayerId, ProductGame};
use crate::info::InfoPartition;
use crate::measure::prefix_reach;
use crate::policy::BehavioralPolicy;
use crate::scalar::{sq_distance, Scalar};

/// Projection from `fine`-keyed to `coarse`-keyed policies under fixed base weights.
#[derive(Clone, Debug)]
pub struct Projector<'a, S> {
    game: &'a ProductGame<S>,
    coarse: &'a InfoPartition,
    fine: &'a InfoPartition,
    reach: Vec<Vec<S>>,
    /// `cover[stage][coarse]`: fine labels inside the coarse label with their base mass.
    cover: Vec<Vec<Vec<(usize, S)>>>,
    /// `spread[stage][fine]`: coarse labels touched by the fine label with their base mass.
    spread: Vec<Vec<Vec<(usize, S)>>>,
}

impl<'a, S: Scalar> Projector<'a, S> {
    /// Projector whose base is `base`, a policy keyed by `fine`.
    pub fn new(
        game: &'a ProductGame<S>,
        coarse: &'a InfoPartition,
        fine: &'a InfoPartition,
        base: &BehavioralPolicy<S>,
    ) -> Self {
        Self::with_reach(game, coarse, fine, prefix_reach(game, fine, base))
    }

    /// Projector from precomputed base prefix reach (`reach[d][node]`).
    pub fn with_reach(
        game: &'a ProductGame<S>,
        coarse: &'a InfoPartition,
        fine: &'a InfoPartition,
        reach: Vec<Vec<S>>,
    ) -> Self {
        let stages = game.num_stages();
        let mut cover = Vec::with_capacity(stages);
        let mut spread = Vec::with_capacity(stages);
        for i in 0..stages {
            let mut by_coarse: Vec<Vec<(usize, S)>> = vec![Vec::new(); coarse.num_labels(i)];
            let mut by_fine: Vec<Vec<(usize, S)>> = vec![Vec::new(); fine.num_labels(i)];
            for (node, &w) in reach[i].iter().enumerate() {
                let c = coarse.label_of(i, node);
                let f = fine.label_of(i, node);
                accumulate(&mut by_coarse[c], f, w);
                accumulate(&mut by_fine[f], c, w);
            }
            cover.push(by_coarse);
            spread.push(by_fine);
        }
        Self {
            game,
            coarse,
            fine,
            reach,
            cover,
            spread,
        }
    }

    pub fn reach(&self) -> &[Vec<S>] {
        &self.reach
    }

    /// Base mass of a coarse label.
    pub fn coarse_mass(&self, stage: usize, label: usize) -> S {
        self.cover[stage][label].iter().fold(S::zero(), |acc, &(_, w)| acc + w)
    }

    /// Coarse-keyed projection of a fine-keyed policy.
    pub fn project(&self, policy: &BehavioralPolicy<S>) -> Result<BehavioralPolicy<S>> {
        let mut rows = Vec::with_capacity(self.cover.len());
        for (i, stage) in self.cover.iter().enumerate() {
            let mut stage_rows = Vec::with_capacity(stage.len());
            for (c, pairs) in stage.iter().enumerate() {
                stage_rows.push(self.average(i, c, pairs, |f| policy.row(i, f))?);
            }
            rows.push(stage_rows);
        }
        Ok(BehavioralPolicy::from_fn(self.coarse, |i, c| std::mem::take(&mut rows[i][c])))
    }

    fn average<'p>(
        &self,
        stage: usize,
        label: usize,
        pairs: &[(usize, S)],
        row: impl Fn(usize) -> &'p [S],
    ) -> Result<Vec<S>>
    where
        S: 'p,
    {
        if let [(only, _)] = pairs {
            return Ok(row(*only).to_vec());
        }
        let total = pairs.iter().fold(S::zero(), |acc, &(_, w)| acc + w);
        if !(total > S::zero()) {
            return Err(Error::ZeroReachLabel { stage, label });
        }
        let mut out = vec![S::zero(); self.coarse.actions(stage)];
        for &(f, w) in pairs {
            for (o, &p) in out.iter_mut().zip(row(f)) {
                *o = *o + w * p;
            }
        }
        for o in &mut out {
            *o = *o / total;
        }
        Ok(out)
    }

    /// Re-keys a coarse policy by the fine map: each fine label plays the base-weighted
    /// average of the coarse rows its prefixes see. When the fine map is finer this is
    /// an exact copy of the single coarse row.
    pub fn lift(&self, coarse_policy: &BehavioralPolicy<S>) -> BehavioralPolicy<S> {
        BehavioralPolicy::from_fn(self.fine, |i, f| self.lifted_row(coarse_policy, i, f))
    }

    /// One row of [`Projector::lift`].
    pub fn lifted_row(&self, coarse_policy: &BehavioralPolicy<S>, stage: usize, fine_label: usize) -> Vec<S> {
        let pairs = &self.spread[stage][fine_label];
        if let [(only, _)] = pairs.as_slice() {
            return coarse_policy.row(stage, *only).to_vec();
        }
        let mut total = pairs.iter().fold(S::zero(), |acc, &(_, w)| acc + w);
        let uniform = !(total > S::zero());
        if uniform {
            total = S::of_usize(pairs.len());
        }
        let mut out = vec![S::zero(); self.fine.actions(stage)];
        for &(c, w) in pairs {
            let w = if uniform { S::one() } else { w };
            for (o, &p) in out.iter_mut().zip(coarse_policy.row(stage, c)) {
                *o = *o + w * p;
            }
        }
        out.iter().map(|&o| o / total).collect()
    }

    /// `Σ_{i ∈ I_p} E_base ‖μ_i − γ_i‖²`, with `μ` fine-keyed and `γ` coarse-keyed.
    pub fn weighted_sq_distance(
        &self,
        player: PlayerId,
        policy: &BehavioralPolicy<S>,
        projected: &BehavioralPolicy<S>,
    ) -> S {
        let mut total = S::zero();
        for i in self.game.stages_of(player) {
            for (node, &w) in self.reach[i].iter().enumerate() {
                let d = sq_distance(policy.at(self.fine, i, node), projected.at(self.coarse, i, node));
                total = total + w * d;
            }
        }
        total
    }
}

fn accumulate<S: Scalar>(list: &mut Vec<(usize, S)>, key: usize, w: S) {
    match list.iter_mut().find(|(k, _)| *k == key) {
        Some((_, acc)) => *acc = *acc + w,
        None => list.push((key, w)),
    }
}

/// Projection with a fresh projector.
pub fn project<S: Scalar>(
    game: &ProductGame<S>,
    coarse: &InfoPartition,
    fine: &InfoPartition,
    base: &BehavioralPolicy<S>,
    policy: &BehavioralPolicy<S>,
) -> Result<BehavioralPolicy<S>> {
    Projector::new(game, coarse, fine, base).project(policy)
}

/// True iff the fine-keyed `policy` plays identical rows on prefixes the coarse map
/// does not distinguish.
pub fn is_implementable<S: Scalar>(
    coarse: &InfoPartition,
    fine: &InfoPartition,
    policy: &BehavioralPolicy<S>,
) -> bool {
    (0..coarse.num_stages()).all(|i| {
        let mut seen: Vec<Option<usize>> = vec![None; coarse.num_labels(i)];
        coarse.node_label[i].iter().enumerate().all(|(node, &c)| {
            let f = fine.label_of(i, node);
            match seen[c] {
                None => {
                    seen[c] = Some(f);
                    true
                }
                Some(g) => g == f || policy.row(i, g) == policy.row(i, f),
            }
        })
    })
}
