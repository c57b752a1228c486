//! Counterfactual regret minimization over one information map.
//!
//! Every (stage, label) slot owns a local learner fed with the conditional expected
//! reward of each of its actions. Conditioning weights come from the current profile
//! mixed with a little uniform play so that no label has zero mass; continuation values
//! use the profile itself. An outcome-sampling mode replaces the exact continuation by
//! an importance-weighted estimate from one sampled history per iteration.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{PlayerId, ProductGame};
use crate::info::InfoPartition;
use crate::learners::{LearnerSpec, LocalLearners};
use crate::measure::{expected_reward, penalized_values, prefix_reach};
use crate::policy::{BehavioralPolicy, SUPPORT_FLOOR};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    Exact,
    /// One history per iteration, drawn from the profile mixed with `exploration`
    /// uniform play.
    Outcome { exploration: f64 },
}

/// Default uniform mix of the sampling profile in outcome-sampling mode.
pub const DEFAULT_EXPLORATION: f64 = 0.1;

/// One line of a run trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<S> {
    pub t: usize,
    /// Expected reward of the implementable output of this iteration.
    pub expected_payoff_projected: S,
    pub penalty_mass: S,
    pub sum_pos_local_regret: S,
    pub lambda_t: S,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfrConfig {
    pub learner: LearnerSpec,
    pub sampling: Sampling,
    /// Number of iterations planned, used for horizon-dependent learning rates.
    pub horizon: Option<usize>,
    /// Player whose expected reward is recorded.
    pub player: PlayerId,
}

impl CfrConfig {
    pub fn new(learner: LearnerSpec) -> Self {
        Self {
            learner,
            sampling: Sampling::Exact,
            horizon: None,
            player: 0,
        }
    }
}

pub struct Cfr<'a, S> {
    game: &'a ProductGame<S>,
    part: &'a InfoPartition,
    config: CfrConfig,
    learners: LocalLearners<S>,
    fixed: BehavioralPolicy<S>,
    current: BehavioralPolicy<S>,
    t: usize,
}

impl<'a, S: Scalar> Cfr<'a, S> {
    pub fn new(game: &'a ProductGame<S>, part: &'a InfoPartition, config: CfrConfig) -> Result<Self> {
        let learning = vec![true; game.num_stages()];
        let learners = LocalLearners::new(part, &learning, config.learner, config.horizon)?;
        let fixed = BehavioralPolicy::uniform(part);
        Ok(Self {
            game,
            part,
            config,
            current: fixed.clone(),
            learners,
            fixed,
            t: 0,
        })
    }

    /// Warm-starts every learner at a random point of its simplex.
    pub fn randomize(&mut self, rng: &mut impl Rng) {
        self.learners.randomize(rng);
    }

    pub fn iterate(&mut self, rng: &mut impl Rng) -> Result<IterationRecord<S>> {
        let mu = self.learners.decide(self.part, &self.fixed);
        let base = mu.floored(S::of(SUPPORT_FLOOR));
        let reach = prefix_reach(self.game, self.part, &base);
        let stages: Vec<usize> = (0..self.game.num_stages()).collect();
        let mut thetas: Vec<Vec<Vec<S>>> = vec![Vec::new(); self.game.num_stages()];
        match self.config.sampling {
            Sampling::Exact => {
                for p in 0..self.game.num_players() {
                    let own: Vec<usize> = stages.iter().copied().filter(|&i| self.game.player_of(i) == p).collect();
                    if own.is_empty() {
                        continue;
                    }
                    let values = penalized_values(self.game, self.part, &mu, self.game.rewards_of(p), |_, _| None);
                    for &i in &own {
                        thetas[i] = conditional_rewards(self.game, self.part, i, &reach[i], &values[i + 1])?;
                    }
                }
            }
            Sampling::Outcome { exploration } => {
                let sample = sample_outcome(self.game, self.part, &mu, S::of(exploration), rng);
                for &i in &stages {
                    let p = self.game.player_of(i);
                    let value = |_stage: usize| self.game.reward(sample.history, p);
                    thetas[i] = sampled_rewards(self.game, self.part, i, &reach[i], &sample, value)?;
                }
            }
        }
        self.learners.observe(&mu, &thetas)?;
        self.t += 1;
        let record = IterationRecord {
            t: self.t,
            expected_payoff_projected: expected_reward(self.game, self.part, &mu, self.config.player),
            penalty_mass: S::zero(),
            sum_pos_local_regret: self.learners.sum_positive_regret(),
            lambda_t: S::zero(),
        };
        self.current = mu;
        Ok(record)
    }

    /// Profile played at the last iteration (uniform before the first).
    pub fn current_policy(&self) -> &BehavioralPolicy<S> {
        &self.current
    }

    pub fn average_policy(&self) -> BehavioralPolicy<S> {
        self.learners.average_policy(self.part, &self.fixed)
    }

    pub fn learners(&self) -> &LocalLearners<S> {
        &self.learners
    }

    pub fn iterations(&self) -> usize {
        self.t
    }
}

/// Per-label conditional expectation of `next` (values one stage deeper), weighting
/// the label's prefixes by `reach`.
pub(crate) fn conditional_rewards<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    stage: usize,
    reach: &[S],
    next: &[S],
) -> Result<Vec<Vec<S>>> {
    let a = game.actions(stage);
    let labels = part.num_labels(stage);
    let mut num = vec![vec![S::zero(); a]; labels];
    let mut den = vec![S::zero(); labels];
    for (node, &w) in reach.iter().enumerate() {
        let g = part.label_of(stage, node);
        den[g] = den[g] + w;
        for (k, slot) in num[g].iter_mut().enumerate() {
            *slot = *slot + w * next[node * a + k];
        }
    }
    for (g, row) in num.iter_mut().enumerate() {
        if !(den[g] > S::zero()) {
            return Err(Error::ZeroReachLabel { stage, label: g });
        }
        for x in row.iter_mut() {
            *x = *x / den[g];
        }
    }
    Ok(num)
}

/// A sampled history with its sampling probability and the per-stage probability
/// the (unmixed) profile gives to the remaining actions.
pub(crate) struct Outcome<S> {
    pub history: usize,
    /// `prefix[d]`: prefix node at depth `d`.
    pub prefix: Vec<usize>,
    pub probability: S,
    /// `tail[d] = ∏_{j ≥ d} μ_j(h_j)`, with `tail[L] = 1`.
    pub tail: Vec<S>,
}

pub(crate) fn sample_outcome<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    mu: &BehavioralPolicy<S>,
    exploration: S,
    rng: &mut impl Rng,
) -> Outcome<S> {
    let weights: Vec<S> = game.nature().iter().map(|s| s.weight).collect();
    let omega = draw(&weights, rng);
    let mut probability = weights[omega];
    let mut prefix = vec![omega];
    let mut taken = Vec::with_capacity(game.num_stages());
    let mut node = omega;
    for d in 0..game.num_stages() {
        let row = mu.at(part, d, node);
        let u = exploration / S::of_usize(row.len());
        let sigma: Vec<S> = row.iter().map(|&p| (S::one() - exploration) * p + u).collect();
        let k = draw(&sigma, rng);
        probability = probability * sigma[k];
        taken.push(row[k]);
        node = game.child(d, node, k);
        prefix.push(node);
    }
    let mut tail = vec![S::one(); game.num_stages() + 1];
    for d in (0..game.num_stages()).rev() {
        tail[d] = tail[d + 1] * taken[d];
    }
    Outcome {
        history: node,
        prefix,
        probability,
        tail,
    }
}

fn draw<S: Scalar>(weights: &[S], rng: &mut impl Rng) -> usize {
    let total = weights.iter().fold(S::zero(), |acc, &w| acc + w);
    let target = S::of(rng.random::<f64>()) * total;
    let mut acc = S::zero();
    for (k, &w) in weights.iter().enumerate() {
        acc = acc + w;
        if target < acc {
            return k;
        }
    }
    weights.iter().rposition(|&w| w > S::zero()).unwrap_or(0)
}

/// Importance-weighted estimate of [`conditional_rewards`] from one sampled history:
/// zero everywhere except the sampled label and action. `value(stage)` is the value
/// credited to the sampled leaf for decisions at `stage`.
pub(crate) fn sampled_rewards<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    stage: usize,
    reach: &[S],
    sample: &Outcome<S>,
    value: impl Fn(usize) -> S,
) -> Result<Vec<Vec<S>>> {
    let a = game.actions(stage);
    let mut out = vec![vec![S::zero(); a]; part.num_labels(stage)];
    let node = sample.prefix[stage];
    let g = part.label_of(stage, node);
    let mass = part.members[stage][g]
        .iter()
        .fold(S::zero(), |acc, &n| acc + reach[n]);
    if !(mass > S::zero()) {
        return Err(Error::ZeroReachLabel { stage, label: g });
    }
    let (_, k) = game.parent(stage + 1, sample.prefix[stage + 1]);
    out[g][k] = reach[node] * sample.tail[stage + 1] * value(stage) / (mass * sample.probability);
    Ok(out)
}

/// Exact counterfactual reward vector of `(stage, label)` under `policy`.
pub fn counterfactual_rewards<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    stage: usize,
    label: usize,
) -> Result<Vec<S>> {
    let base = policy.floored(S::of(SUPPORT_FLOOR));
    let reach = prefix_reach(game, part, &base);
    let p = game.player_of(stage);
    let values = penalized_values(game, part, policy, game.rewards_of(p), |_, _| None);
    let mut all = conditional_rewards(game, part, stage, &reach[stage], &values[stage + 1])?;
    Ok(std::mem::take(&mut all[label]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::InformationMap;
    use crate::learners::LearnerKind;
    use crate::measure::expected_reward;
    use crate::oracle::best_response_value;
    use crate::policy::vertex;
    use crate::zoo::{MatchingPennies, TradeComm, HEAD, PASS, SAME, TAIL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn part(g: &ProductGame<f64>, m: &InformationMap) -> InfoPartition {
        InfoPartition::compile(g, m).unwrap()
    }

    #[test]
    fn single_stage_rewards_are_unconditioned_action_values() {
        let g = ProductGame::<f64>::new(
            vec![crate::game::NatureState::new(vec![0], 0.25), crate::game::NatureState::new(vec![1], 0.75)],
            vec![crate::game::Stage::new(0, 2)],
            1,
            |h| vec![(h.nature as f64) + h.actions[0] as f64 * 10.0],
        )
        .unwrap();
        let x = part(&g, &InformationMap::reveal(vec![vec![]]));
        let theta = counterfactual_rewards(&g, &x, &BehavioralPolicy::uniform(&x), 0, 0).unwrap();
        assert!((theta[0] - 0.75).abs() < 1e-12 && (theta[1] - 10.75).abs() < 1e-12);
    }

    #[test]
    fn matching_pennies_bob_rewards_by_hand() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let x = part(&mp.game, &mp.original);
        // Alice shows HEAD when SAME and TAIL when DIFFERENT.
        let mu = BehavioralPolicy::from_fn(&x, |i, g| {
            if i == 0 {
                let state = mp.game.nature()[x.members[0][g][0]].coords[0];
                vertex(2, if state == SAME { HEAD } else { TAIL })
            } else {
                vec![1.0 / 3.0; 3]
            }
        });
        let heads = x.label_of(1, mp.game.child(0, SAME, HEAD));
        let theta = counterfactual_rewards(&mp.game, &x, &mu, 1, heads).unwrap();
        // Given HEAD, the state is SAME up to the support floor.
        assert!((theta[HEAD] - 1.0).abs() < 1e-5);
        assert!((theta[PASS] - 0.6).abs() < 1e-12);
        let forced = mu.with_constant_stage(&x, 1, &vertex(3, HEAD)).unwrap();
        let theta_forced = counterfactual_rewards(&mp.game, &x, &forced, 1, heads).unwrap();
        assert_eq!(theta_forced[HEAD], theta[HEAD]);
    }

    #[test]
    fn first_iteration_evaluates_the_uniform_profile() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let x = part(&mp.game, &mp.original);
        let mut cfr = Cfr::new(&mp.game, &x, CfrConfig::new(LearnerSpec::new(LearnerKind::RegretMatching))).unwrap();
        let rec = cfr.iterate(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let uniform = expected_reward(&mp.game, &x, &BehavioralPolicy::uniform(&x), 0);
        assert_eq!(rec.expected_payoff_projected, uniform);
        assert!((uniform - (0.6 + 0.5 + 0.5) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_runs_are_reproducible() {
        let tc = TradeComm::new(2, 2).build::<f64>().unwrap();
        let x = part(&tc.game, &tc.perfect_recall);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut cfr = Cfr::new(&tc.game, &x, CfrConfig::new(LearnerSpec::new(LearnerKind::RegretMatching))).unwrap();
            cfr.randomize(&mut rng);
            (0..20).map(|_| cfr.iterate(&mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sampled_estimates_are_unbiased() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let x = part(&mp.game, &mp.original);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mu = BehavioralPolicy::random(&x, &mut rng);
        let reach = prefix_reach(&mp.game, &x, &mu.floored(SUPPORT_FLOOR));
        let values = penalized_values(&mp.game, &x, &mu, mp.game.rewards_of(0), |_, _| None);
        let exact = conditional_rewards(&mp.game, &x, 1, &reach[1], &values[2]).unwrap();
        let n = 200_000;
        let mut mean = vec![vec![0.0; 3]; 2];
        for _ in 0..n {
            let s = sample_outcome(&mp.game, &x, &mu, 0.1, &mut rng);
            let est = sampled_rewards(&mp.game, &x, 1, &reach[1], &s, |_| mp.game.reward(s.history, 0)).unwrap();
            for g in 0..2 {
                for k in 0..3 {
                    mean[g][k] += est[g][k] / n as f64;
                }
            }
        }
        for g in 0..2 {
            for k in 0..3 {
                assert!((mean[g][k] - exact[g][k]).abs() < 0.03, "{g} {k}: {} vs {}", mean[g][k], exact[g][k]);
            }
        }
    }

    #[test]
    fn perfect_recall_trade_comm_converges() {
        let tc = TradeComm::new(2, 2).build::<f64>().unwrap();
        let x = part(&tc.game, &tc.perfect_recall);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cfr = Cfr::new(&tc.game, &x, CfrConfig::new(LearnerSpec::new(LearnerKind::RegretMatching))).unwrap();
        for _ in 0..1000 {
            cfr.iterate(&mut rng).unwrap();
        }
        let avg = expected_reward(&tc.game, &x, &cfr.average_policy(), 0);
        let best = best_response_value(&tc.game, &x, 0, &cfr.average_policy()).unwrap();
        assert_eq!(best, 1.0);
        assert!(avg > 0.9, "{avg}");
    }
}
