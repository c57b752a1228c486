//! Local no-regret learners with a decide/observe contract.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::InfoPartition;
use crate::policy::BehavioralPolicy;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    #[serde(alias = "rm")]
    RegretMatching,
    #[serde(alias = "rm_plus")]
    RegretMatchingPlus,
    #[serde(alias = "ftrl")]
    FtrlEntropic,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::RegretMatching => "regret_matching",
            LearnerKind::RegretMatchingPlus => "regret_matching_plus",
            LearnerKind::FtrlEntropic => "ftrl_entropic",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regret_matching" | "rm" => Ok(LearnerKind::RegretMatching),
            "regret_matching_plus" | "rm_plus" => Ok(LearnerKind::RegretMatchingPlus),
            "ftrl_entropic" | "ftrl" => Ok(LearnerKind::FtrlEntropic),
            _ => Err(Error::InvalidParameter(format!("unknown learner {s:?}"))),
        }
    }
}

/// Learner kind plus the entropic learning rate, if fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub eta: Option<f64>,
}

/// Entropic learning rate used when none is configured and the horizon is unknown.
pub const DEFAULT_ETA: f64 = 0.1;

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        Self { kind, eta: None }
    }

    pub fn with_eta(kind: LearnerKind, eta: f64) -> Self {
        Self { kind, eta: Some(eta) }
    }

    /// `√(ln A / T)` for a known horizon `T`, else the configured or default rate.
    pub fn eta_for(&self, actions: usize, horizon: Option<usize>) -> f64 {
        match (self.eta, horizon) {
            (Some(eta), _) => eta,
            (None, Some(t)) if t > 0 && actions > 1 => ((actions as f64).ln() / t as f64).sqrt(),
            _ => DEFAULT_ETA,
        }
    }

    pub fn build<S: Scalar>(&self, actions: usize, horizon: Option<usize>) -> Result<Learner<S>> {
        Learner::new(self.kind, actions, self.eta_for(actions, horizon))
    }
}

/// One local learner. `cumulative` holds regrets for the regret-matching kinds and
/// rewards for the entropic one.
#[derive(Clone, Debug, PartialEq)]
pub struct Learner<S> {
    kind: LearnerKind,
    cumulative: Vec<S>,
    eta: S,
}

impl<S: Scalar> Learner<S> {
    pub fn new(kind: LearnerKind, actions: usize, eta: f64) -> Result<Self> {
        if actions == 0 {
            return Err(Error::InvalidParameter("a learner needs at least one action".into()));
        }
        if kind == LearnerKind::FtrlEntropic && !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!("learning rate must be positive, got {eta}")));
        }
        Ok(Self {
            kind,
            cumulative: vec![S::zero(); actions],
            eta: S::of(eta),
        })
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn actions(&self) -> usize {
        self.cumulative.len()
    }

    pub fn cumulative(&self) -> &[S] {
        &self.cumulative
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    pub fn decide(&self) -> Vec<S> {
        let a = self.cumulative.len();
        match self.kind {
            LearnerKind::RegretMatching | LearnerKind::RegretMatchingPlus => {
                let positive: Vec<S> = self.cumulative.iter().map(|&r| r.max(S::zero())).collect();
                let total: S = positive.iter().copied().sum();
                if total > S::zero() {
                    positive.into_iter().map(|p| p / total).collect()
                } else {
                    vec![S::one() / S::of_usize(a); a]
                }
            }
            LearnerKind::FtrlEntropic => {
                let scaled: Vec<S> = self.cumulative.iter().map(|&c| self.eta * c).collect();
                let top = scaled.iter().copied().fold(S::neg_infinity(), S::max);
                let weights: Vec<S> = scaled.iter().map(|&s| (s - top).exp()).collect();
                let total: S = weights.iter().copied().sum();
                weights.into_iter().map(|w| w / total).collect()
            }
        }
    }

    pub fn observe(&mut self, reward: &[S]) -> Result<()> {
        if reward.len() != self.cumulative.len() {
            return Err(Error::InvalidParameter(format!(
                "reward has {} entries for {} actions",
                reward.len(),
                self.cumulative.len()
            )));
        }
        if let Some(bad) = reward.iter().find(|r| !r.is_finite()) {
            return Err(Error::NonFinite(format!("reward entry {bad}")));
        }
        match self.kind {
            LearnerKind::RegretMatching | LearnerKind::RegretMatchingPlus => {
                let x = self.decide();
                let realized = crate::scalar::dot(&x, reward);
                for (c, &r) in self.cumulative.iter_mut().zip(reward) {
                    *c = *c + (r - realized);
                    if self.kind == LearnerKind::RegretMatchingPlus {
                        *c = c.max(S::zero());
                    }
                }
            }
            LearnerKind::FtrlEntropic => {
                for (c, &r) in self.cumulative.iter_mut().zip(reward) {
                    *c = *c + r;
                }
            }
        }
        Ok(())
    }

    /// Sets the state so that the next decision equals `target`, a point of the
    /// simplex with full support.
    pub fn warm_start(&mut self, target: &[S]) {
        if self.cumulative.len() < 2 {
            return;
        }
        for (c, &p) in self.cumulative.iter_mut().zip(target) {
            *c = match self.kind {
                LearnerKind::FtrlEntropic => p.ln() / self.eta,
                _ => p,
            };
        }
    }
}

/// A point drawn from the flat Dirichlet distribution over `actions` entries.
pub fn dirichlet_draw<S: Scalar>(actions: usize, rng: &mut impl Rng) -> Vec<S> {
    let draws: Vec<f64> = (0..actions)
        .map(|_| rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| S::of(d / total)).collect()
}

/// `max_a Σ_t r_t[a] − Σ_t ⟨x_t, r_t⟩` for aligned decision and reward sequences.
pub fn external_regret<S: Scalar>(decisions: &[Vec<S>], rewards: &[Vec<S>]) -> S {
    let mut tracker: Option<RegretTracker<S>> = None;
    for (x, r) in decisions.iter().zip(rewards) {
        tracker.get_or_insert_with(|| RegretTracker::new(r.len())).record(x, r);
    }
    tracker.map_or(S::zero(), |t| t.regret())
}

/// Running totals needed to evaluate the regret of one local learner.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretTracker<S> {
    pub sum_reward: Vec<S>,
    pub realized: S,
    pub rounds: usize,
}

impl<S: Scalar> RegretTracker<S> {
    pub fn new(actions: usize) -> Self {
        Self {
            sum_reward: vec![S::zero(); actions],
            realized: S::zero(),
            rounds: 0,
        }
    }

    pub fn record(&mut self, decision: &[S], reward: &[S]) {
        for (s, &r) in self.sum_reward.iter_mut().zip(reward) {
            *s = *s + r;
        }
        self.realized = self.realized + crate::scalar::dot(decision, reward);
        self.rounds += 1;
    }

    /// Cumulative regret against the best fixed action.
    pub fn regret(&self) -> S {
        self.sum_reward.iter().copied().fold(S::neg_infinity(), S::max) - self.realized
    }

    /// Regret divided by the number of rounds.
    pub fn average_regret(&self) -> S {
        if self.rounds == 0 {
            S::zero()
        } else {
            self.regret() / S::of_usize(self.rounds)
        }
    }
}

/// One learner and one regret tracker per (stage, label) slot of the learning stages,
/// plus the running sum of decisions for the average policy.
#[derive(Clone, Debug)]
pub struct LocalLearners<S> {
    learners: Vec<Vec<Learner<S>>>,
    trackers: Vec<Vec<RegretTracker<S>>>,
    policy_sum: Vec<Vec<Vec<S>>>,
    rounds: usize,
}

impl<S: Scalar> LocalLearners<S> {
    /// Learners for the stages flagged in `learning`; other stages get none.
    pub fn new(
        part: &InfoPartition,
        learning: &[bool],
        spec: LearnerSpec,
        horizon: Option<usize>,
    ) -> Result<Self> {
        let mut learners = Vec::with_capacity(part.num_stages());
        let mut trackers = Vec::with_capacity(part.num_stages());
        let mut policy_sum = Vec::with_capacity(part.num_stages());
        for i in 0..part.num_stages() {
            let (a, n) = (part.actions(i), part.num_labels(i));
            if learning[i] {
                learners.push((0..n).map(|_| spec.build(a, horizon)).collect::<Result<Vec<_>>>()?);
                trackers.push(vec![RegretTracker::new(a); n]);
                policy_sum.push(vec![vec![S::zero(); a]; n]);
            } else {
                learners.push(Vec::new());
                trackers.push(Vec::new());
                policy_sum.push(Vec::new());
            }
        }
        Ok(Self {
            learners,
            trackers,
            policy_sum,
            rounds: 0,
        })
    }

    pub fn is_learning(&self, stage: usize) -> bool {
        !self.learners[stage].is_empty()
    }

    /// Warm-starts every learner at an independent flat Dirichlet draw, in slot order.
    pub fn randomize(&mut self, rng: &mut impl Rng) {
        for stage in &mut self.learners {
            for learner in stage {
                let draw = dirichlet_draw(learner.actions(), rng);
                learner.warm_start(&draw);
            }
        }
    }

    /// Current decisions at the learning stages, `fixed` rows elsewhere.
    pub fn decide(&self, part: &InfoPartition, fixed: &BehavioralPolicy<S>) -> BehavioralPolicy<S> {
        BehavioralPolicy::from_fn(part, |i, g| {
            if self.learners[i].is_empty() {
                fixed.row(i, g).to_vec()
            } else {
                self.learners[i][g].decide()
            }
        })
    }

    /// Feeds `rewards[stage][label]` to every learner; `policy` must be the profile
    /// returned by the matching [`LocalLearners::decide`].
    pub fn observe(&mut self, policy: &BehavioralPolicy<S>, rewards: &[Vec<Vec<S>>]) -> Result<()> {
        for (i, stage) in self.learners.iter_mut().enumerate() {
            for (g, learner) in stage.iter_mut().enumerate() {
                let x = policy.row(i, g);
                self.trackers[i][g].record(x, &rewards[i][g]);
                for (s, &p) in self.policy_sum[i][g].iter_mut().zip(x) {
                    *s = *s + p;
                }
                learner.observe(&rewards[i][g])?;
            }
        }
        self.rounds += 1;
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn learner(&self, stage: usize, label: usize) -> &Learner<S> {
        &self.learners[stage][label]
    }

    pub fn tracker(&self, stage: usize, label: usize) -> &RegretTracker<S> {
        &self.trackers[stage][label]
    }

    /// `Σ_{(i,g)} max(R_loc(i,g), 0)` with regrets averaged over rounds.
    pub fn sum_positive_regret(&self) -> S {
        self.trackers
            .iter()
            .flatten()
            .fold(S::zero(), |acc, t| acc + t.average_regret().max(S::zero()))
    }

    /// Uniform average of the decisions so far, `fixed` rows at other stages.
    pub fn average_policy(&self, part: &InfoPartition, fixed: &BehavioralPolicy<S>) -> BehavioralPolicy<S> {
        BehavioralPolicy::from_fn(part, |i, g| {
            if self.learners[i].is_empty() || self.rounds == 0 {
                return if self.learners[i].is_empty() {
                    fixed.row(i, g).to_vec()
                } else {
                    self.learners[i][g].decide()
                };
            }
            let n = S::of_usize(self.rounds);
            self.policy_sum[i][g].iter().map(|&s| s / n).collect()
        })
    }
}
