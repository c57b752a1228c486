//! Progressive hiding: local learners on a relaxed map, pulled toward implementability.
//!
//! Each iteration plays the learners' profile on the relaxed (finer) map, projects it
//! onto the original map, and feeds every learner of the team player a reward vector in
//! which each later stage pays `λ‖μ_i − γ_i‖²` for being unimplementable and the own
//! stage pays the linearization of that penalty. The projected policy `γ` is the
//! implementable output. Stages of other players learn plainly, as in CFR.
//!
//! With the relaxed map equal to the original one, `γ` is an exact copy of `μ`, every
//! penalty is exactly zero, and a run is bitwise identical to a CFR run.

use rand::Rng;

use crate::cfr::{conditional_rewards, sample_outcome, sampled_rewards, IterationRecord, Sampling};
use crate::error::{Error, Result};
use crate::game::{History, PlayerId, ProductGame};
use crate::info::{has_perfect_recall, InfoPartition};
use crate::learners::{LearnerSpec, LocalLearners};
use crate::measure::{expected_reward, penalized_values, prefix_reach};
use crate::oracle::{maximize_deterministic, others_weight, DEFAULT_ASSIGNMENT_CAP};
use crate::policy::{BehavioralPolicy, SUPPORT_FLOOR};
use crate::projection::Projector;
use crate::scalar::{sq_distance, Scalar};

/// How the penalty weight `λ^t` evolves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PenaltySchedule {
    Constant(f64),
    /// `λ^t = initial · t / T`; needs a horizon.
    LinearRamp { initial: f64 },
    /// Experimental: multiply by 1.1 after an iteration whose projected payoff beats
    /// `target`, divide by 1.1 otherwise.
    PayoffController { initial: f64, target: f64 },
}

pub const CONTROLLER_FACTOR: f64 = 1.1;

impl PenaltySchedule {
    fn initial(&self) -> f64 {
        match *self {
            Self::Constant(l) => l,
            Self::LinearRamp { initial } | Self::PayoffController { initial, .. } => initial,
        }
    }

    fn validate(&self, horizon: Option<usize>) -> Result<()> {
        let l = self.initial();
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::InvalidParameter(format!("penalty weight must be finite and nonnegative, got {l}")));
        }
        if let Self::PayoffController { target, .. } = self {
            if !target.is_finite() {
                return Err(Error::InvalidParameter("controller target must be finite".into()));
            }
        }
        if matches!(self, Self::LinearRamp { .. }) && horizon.is_none_or(|h| h == 0) {
            return Err(Error::InvalidParameter("a linear ramp needs a positive horizon".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhConfig {
    pub learner: LearnerSpec,
    pub sampling: Sampling,
    pub schedule: PenaltySchedule,
    /// The team player whose stages are penalized.
    pub player: PlayerId,
    pub horizon: Option<usize>,
    /// Accumulate what [`ProgressiveHiding::regret_report`] needs (costs one pass over
    /// all histories per iteration).
    pub audit: bool,
}

impl PhConfig {
    pub fn new(learner: LearnerSpec, schedule: PenaltySchedule) -> Self {
        Self {
            learner,
            sampling: Sampling::Exact,
            schedule,
            player: 0,
            horizon: None,
            audit: false,
        }
    }
}

#[derive(Clone, Debug)]
struct Audit<S> {
    /// Per history: `Σ_t ℙ·π^t_{-p}·(r_p − Σ_i λ^t‖δ_{h_i} − γ^t_i(h)‖²)`.
    leaf: Vec<S>,
    /// `Σ_t ϱ_t(μ^t)`.
    realized: S,
    /// `Σ_t λ^t 𝔼_{μ^t} Σ_i ‖μ^t_i − γ^t_i‖²`.
    penalty: S,
}

pub struct ProgressiveHiding<'a, S> {
    game: &'a ProductGame<S>,
    coarse: &'a InfoPartition,
    fine: &'a InfoPartition,
    config: PhConfig,
    learners: LocalLearners<S>,
    fixed: BehavioralPolicy<S>,
    current: BehavioralPolicy<S>,
    projected: BehavioralPolicy<S>,
    lambda: S,
    audit: Option<Audit<S>>,
    t: usize,
}

impl<'a, S: Scalar> ProgressiveHiding<'a, S> {
    /// `coarse` is the original map, `fine` the relaxed one the learners play on.
    pub fn new(
        game: &'a ProductGame<S>,
        coarse: &'a InfoPartition,
        fine: &'a InfoPartition,
        config: PhConfig,
    ) -> Result<Self> {
        config.schedule.validate(config.horizon)?;
        if config.player >= game.num_players() {
            return Err(Error::InvalidParameter(format!("no player {}", config.player)));
        }
        let learning = vec![true; game.num_stages()];
        let learners = LocalLearners::new(fine, &learning, config.learner, config.horizon)?;
        let fixed = BehavioralPolicy::uniform(fine);
        let audit = config.audit.then(|| Audit {
            leaf: vec![S::zero(); game.num_histories()],
            realized: S::zero(),
            penalty: S::zero(),
        });
        Ok(Self {
            game,
            coarse,
            fine,
            config,
            learners,
            current: fixed.clone(),
            projected: BehavioralPolicy::uniform(coarse),
            fixed,
            lambda: S::of(config.schedule.initial()),
            audit,
            t: 0,
        })
    }

    pub fn randomize(&mut self, rng: &mut impl Rng) {
        self.learners.randomize(rng);
    }

    fn lambda_at(&self, t: usize) -> S {
        match self.config.schedule {
            PenaltySchedule::Constant(l) => S::of(l),
            PenaltySchedule::LinearRamp { initial } => {
                let horizon = self.config.horizon.unwrap_or(1);
                S::of(initial) * S::of_usize(t) / S::of_usize(horizon)
            }
            PenaltySchedule::PayoffController { .. } => self.lambda,
        }
    }

    pub fn iterate(&mut self, rng: &mut impl Rng) -> Result<IterationRecord<S>> {
        let (game, fine, coarse, p) = (self.game, self.fine, self.coarse, self.config.player);
        let t = self.t + 1;
        let lambda = self.lambda_at(t);
        let mu = self.learners.decide(fine, &self.fixed);
        let base = mu.floored(S::of(SUPPORT_FLOOR));
        let projector = Projector::with_reach(game, coarse, fine, prefix_reach(game, fine, &base));
        let gamma = projector.project(&mu)?;
        let reach = projector.reach();
        let penalty = |d: usize, node: usize| {
            (game.player_of(d) == p)
                .then(|| lambda * sq_distance(mu.at(fine, d, node), gamma.at(coarse, d, node)))
        };
        let linearized = |i: usize, theta: &mut Vec<Vec<S>>| {
            let two = S::of(2.0);
            for (g, row) in theta.iter_mut().enumerate() {
                let target = projector.lifted_row(&gamma, i, g);
                for ((x, &m), &c) in row.iter_mut().zip(mu.row(i, g)).zip(&target) {
                    *x = *x - two * lambda * (m - c);
                }
            }
        };

        let mut thetas: Vec<Vec<Vec<S>>> = vec![Vec::new(); game.num_stages()];
        let mut own_values = None;
        match self.config.sampling {
            Sampling::Exact => {
                for q in 0..game.num_players() {
                    let stages = game.stages_of(q);
                    if stages.is_empty() {
                        continue;
                    }
                    let values = if q == p {
                        penalized_values(game, fine, &mu, game.rewards_of(q), penalty)
                    } else {
                        penalized_values(game, fine, &mu, game.rewards_of(q), |_, _| None)
                    };
                    for &i in &stages {
                        thetas[i] = conditional_rewards(game, fine, i, &reach[i], &values[i + 1])?;
                        if q == p {
                            linearized(i, &mut thetas[i]);
                        }
                    }
                    if q == p {
                        own_values = Some(values);
                    }
                }
            }
            Sampling::Outcome { exploration } => {
                let sample = sample_outcome(game, fine, &mu, S::of(exploration), rng);
                let later: Vec<S> = {
                    // later[i]: penalties the sampled history pays at own stages after i.
                    let mut acc = vec![S::zero(); game.num_stages() + 1];
                    for d in (0..game.num_stages()).rev() {
                        acc[d] = acc[d + 1];
                        if let Some(x) = penalty(d, sample.prefix[d]) {
                            acc[d] = acc[d] + x;
                        }
                    }
                    acc
                };
                for i in 0..game.num_stages() {
                    let q = game.player_of(i);
                    let reward = game.reward(sample.history, q);
                    let value = |stage: usize| if q == p { reward - later[stage + 1] } else { reward };
                    thetas[i] = sampled_rewards(game, fine, i, &reach[i], &sample, value)?;
                    if q == p {
                        linearized(i, &mut thetas[i]);
                    }
                }
            }
        }
        self.learners.observe(&mu, &thetas)?;

        let penalty_mass = {
            let reach_mu = prefix_reach(game, fine, &mu);
            let mut total = S::zero();
            for i in game.stages_of(p) {
                for (node, &w) in reach_mu[i].iter().enumerate() {
                    total = total + w * sq_distance(mu.at(fine, i, node), gamma.at(coarse, i, node));
                }
            }
            lambda * total
        };
        let payoff = expected_reward(game, coarse, &gamma, p);
        if let Some(audit) = self.audit.as_mut() {
            let values = match own_values {
                Some(v) => v,
                None => penalized_values(game, fine, &mu, game.rewards_of(p), penalty),
            };
            audit.realized = game
                .nature()
                .iter()
                .zip(&values[0])
                .fold(audit.realized, |acc, (s, &v)| acc + s.weight * v);
            audit.penalty = audit.penalty + penalty_mass;
            let weight = others_weight(game, fine, &mu, p);
            let paid = vertex_penalties(game, coarse, &gamma, p, lambda);
            for (h, slot) in audit.leaf.iter_mut().enumerate() {
                *slot = *slot + weight[h] * (game.reward(h, p) - paid[h]);
            }
        }
        if let PenaltySchedule::PayoffController { target, .. } = self.config.schedule {
            let factor = S::of(CONTROLLER_FACTOR);
            self.lambda = if payoff > S::of(target) { lambda * factor } else { lambda / factor };
        }
        let record = IterationRecord {
            t,
            expected_payoff_projected: payoff,
            penalty_mass,
            sum_pos_local_regret: self.learners.sum_positive_regret(),
            lambda_t: lambda,
        };
        self.t = t;
        self.current = mu;
        self.projected = gamma;
        Ok(record)
    }

    /// Relaxed profile played at the last iteration.
    pub fn current_policy(&self) -> &BehavioralPolicy<S> {
        &self.current
    }

    /// Implementable output of the last iteration, keyed by the original map.
    pub fn projected_policy(&self) -> &BehavioralPolicy<S> {
        &self.projected
    }

    pub fn average_policy(&self) -> BehavioralPolicy<S> {
        self.learners.average_policy(self.fine, &self.fixed)
    }

    pub fn learners(&self) -> &LocalLearners<S> {
        &self.learners
    }

    pub fn iterations(&self) -> usize {
        self.t
    }

    /// Regret accounting of the team player over the iterations so far. Needs
    /// `audit`; the enumeration-based lower bound is skipped when more than `cap`
    /// assignments would be searched.
    pub fn regret_report(&self, cap: u64) -> Result<RegretReport<S>> {
        let audit = self
            .audit
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("regret report needs an audited run".into()))?;
        if self.t == 0 {
            return Err(Error::InvalidParameter("regret report needs at least one iteration".into()));
        }
        let p = self.config.player;
        let rounds = S::of_usize(self.t);
        let own = self.game.stages_of(p);
        let local: Vec<Vec<S>> = (0..self.game.num_stages())
            .map(|i| {
                if own.contains(&i) {
                    (0..self.fine.num_labels(i))
                        .map(|g| self.learners.tracker(i, g).average_regret())
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        let sum_positive = local.iter().flatten().fold(S::zero(), |acc, &r| acc + r.max(S::zero()));
        let regret_lower_bound = match maximize_deterministic(self.game, self.fine, p, &audit.leaf, cap) {
            Ok(best) => Some((best.value - audit.realized) / rounds),
            Err(Error::EnumerationTooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        let penalty_average = audit.penalty / rounds;
        let slack = S::of(1e-9);
        let perfect_recall = has_perfect_recall(self.game, self.fine, p);
        let max_abs_reward = self.game.max_abs_reward();
        Ok(RegretReport {
            rounds: self.t,
            regret_lower_bound,
            regret_bound_holds: match (perfect_recall, regret_lower_bound) {
                (true, Some(r)) => Some(r <= sum_positive + slack),
                _ => None,
            },
            penalty_bound_holds: penalty_average <= sum_positive + S::of(2.0) * max_abs_reward + slack,
            local,
            sum_positive,
            penalty_average,
            max_abs_reward,
            perfect_recall,
        })
    }

    /// [`ProgressiveHiding::regret_report`] with the default enumeration cap.
    pub fn report(&self) -> Result<RegretReport<S>> {
        self.regret_report(DEFAULT_ASSIGNMENT_CAP)
    }
}

/// Per history, `Σ_{i ∈ I_p} λ‖δ_{h_i} − γ_i(h)‖²`: what a deterministic policy that
/// produces `h` pays in the auxiliary game.
fn vertex_penalties<S: Scalar>(
    game: &ProductGame<S>,
    coarse: &InfoPartition,
    gamma: &BehavioralPolicy<S>,
    player: PlayerId,
    lambda: S,
) -> Vec<S> {
    let mut level = vec![S::zero(); game.nature().len()];
    for d in 0..game.num_stages() {
        let a = game.actions(d);
        let own = game.player_of(d) == player;
        let mut next = vec![S::zero(); level.len() * a];
        for (node, &acc) in level.iter().enumerate() {
            if !own {
                next[node * a..(node + 1) * a].fill(acc);
                continue;
            }
            let row = gamma.at(coarse, d, node);
            let norm = row.iter().fold(S::zero(), |s, &x| s + x * x);
            for k in 0..a {
                let dist = norm - S::of(2.0) * row[k] + S::one();
                next[node * a + k] = acc + lambda * dist;
            }
        }
        level = next;
    }
    level
}

/// Outcome of [`ProgressiveHiding::regret_report`]. All regrets are averaged over rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport<S> {
    pub rounds: usize,
    /// `local[i][g]`: local regret of the learner at `(i, g)` (empty rows at stages of
    /// other players).
    pub local: Vec<Vec<S>>,
    /// Sum of the positive parts of `local`.
    pub sum_positive: S,
    /// Best deterministic relaxed policy's auxiliary payoff minus the realized one.
    /// `None` when the search was over the cap.
    pub regret_lower_bound: Option<S>,
    /// Average penalty mass paid by the iterates.
    pub penalty_average: S,
    pub max_abs_reward: S,
    /// Whether the relaxed map gives the player perfect recall.
    pub perfect_recall: bool,
    /// `regret_lower_bound ≤ sum_positive`, when the lower bound exists and the relaxed
    /// map has perfect recall.
    pub regret_bound_holds: Option<bool>,
    /// `penalty_average ≤ sum_positive + 2 max|r|`.
    pub penalty_bound_holds: bool,
}

/// `λ‖μ_i(𝒳̃_i(h)) − γ_i(𝒳_i(h))‖²`.
#[allow(clippy::too_many_arguments)]
pub fn penalty_term<S: Scalar>(
    game: &ProductGame<S>,
    coarse: &InfoPartition,
    fine: &InfoPartition,
    lambda: S,
    policy: &BehavioralPolicy<S>,
    projected: &BehavioralPolicy<S>,
    stage: usize,
    history: &History,
) -> Result<S> {
    let index = game
        .history_index(history)
        .ok_or_else(|| Error::InvalidParameter(format!("{history:?} is not a history of the game")))?;
    let node = game.ancestor(game.num_stages(), index, stage);
    Ok(lambda * sq_distance(policy.at(fine, stage, node), projected.at(coarse, stage, node)))
}

/// The exact reward vector the learner at `(stage, label)` of the relaxed map receives
/// when the profile is `policy` and the penalty weight `lambda`.
#[allow(clippy::too_many_arguments)]
pub fn local_reward_vector<S: Scalar>(
    game: &ProductGame<S>,
    coarse: &InfoPartition,
    fine: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    lambda: S,
    player: PlayerId,
    stage: usize,
    label: usize,
) -> Result<Vec<S>> {
    let base = policy.floored(S::of(SUPPORT_FLOOR));
    let projector = Projector::new(game, coarse, fine, &base);
    let gamma = projector.project(policy)?;
    let q = game.player_of(stage);
    let values = penalized_values(game, fine, policy, game.rewards_of(q), |d, node| {
        (q == player && game.player_of(d) == player)
            .then(|| lambda * sq_distance(policy.at(fine, d, node), gamma.at(coarse, d, node)))
    });
    let mut theta = conditional_rewards(game, fine, stage, &projector.reach()[stage], &values[stage + 1])?;
    let mut row = std::mem::take(&mut theta[label]);
    if q == player {
        let target = projector.lifted_row(&gamma, stage, label);
        for ((x, &m), &c) in row.iter_mut().zip(policy.row(stage, label)).zip(&target) {
            *x = *x - S::of(2.0) * lambda * (m - c);
        }
    }
    Ok(row)
}

/// The local criterion of `(stage, label)` evaluated at an arbitrary local decision,
/// by direct enumeration of histories. It is affine in `local` and equals
/// `⟨local, local_reward_vector(..)⟩`.
#[allow(clippy::too_many_arguments)]
pub fn local_criterion<S: Scalar>(
    game: &ProductGame<S>,
    coarse: &InfoPartition,
    fine: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    lambda: S,
    player: PlayerId,
    stage: usize,
    label: usize,
    local: &[S],
) -> Result<S> {
    let base = policy.floored(S::of(SUPPORT_FLOOR));
    let gamma = Projector::new(game, coarse, fine, &base).project(policy)?;
    let reach = prefix_reach(game, fine, &base);
    let depth = game.num_stages();
    let q = game.player_of(stage);
    let (mut num, mut den) = (S::zero(), S::zero());
    for node in 0..game.nodes_at(stage) {
        if fine.label_of(stage, node) == label {
            den = den + reach[stage][node];
        }
    }
    if !(den > S::zero()) {
        return Err(Error::ZeroReachLabel { stage, label });
    }
    for (index, h) in game.histories().enumerate() {
        let prefix = game.ancestor(depth, index, stage);
        if fine.label_of(stage, prefix) != label {
            continue;
        }
        let k = h.actions[stage];
        let mut weight = reach[stage][prefix] * local[k];
        let mut value = game.reward(index, q);
        for j in stage + 1..depth {
            let node = game.ancestor(depth, index, j);
            weight = weight * policy.at(fine, j, node)[h.actions[j]];
            if q == player && game.player_of(j) == player {
                value = value - lambda * sq_distance(policy.at(fine, j, node), gamma.at(coarse, j, node));
            }
        }
        if q == player {
            let m = policy.at(fine, stage, prefix)[k];
            let c = gamma.at(coarse, stage, prefix)[k];
            value = value - S::of(2.0) * lambda * (m - c);
        }
        num = num + weight * value;
    }
    Ok(num / den)
}

/// The auxiliary payoff `ϱ(comparator)`: expected reward minus the penalties paid at
/// the player's stages, when the player follows `comparator` (keyed by the relaxed
/// map), the other stages follow `policy`, and `projected` is the implementable target.
#[allow(clippy::too_many_arguments)]
pub fn auxiliary_payoff<S: Scalar>(
    game: &ProductGame<S>,
    coarse: &InfoPartition,
    fine: &InfoPartition,
    policy: &BehavioralPolicy<S>,
    projected: &BehavioralPolicy<S>,
    comparator: &BehavioralPolicy<S>,
    lambda: S,
    player: PlayerId,
) -> S {
    let mixed = BehavioralPolicy::from_fn(fine, |i, g| {
        if game.player_of(i) == player {
            comparator.row(i, g).to_vec()
        } else {
            policy.row(i, g).to_vec()
        }
    });
    let values = penalized_values(game, fine, &mixed, game.rewards_of(player), |d, node| {
        (game.player_of(d) == player)
            .then(|| lambda * sq_distance(mixed.at(fine, d, node), projected.at(coarse, d, node)))
    });
    game.nature()
        .iter()
        .zip(&values[0])
        .fold(S::zero(), |acc, (s, &v)| acc + s.weight * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfr::{counterfactual_rewards, Cfr, CfrConfig};
    use crate::info::InformationMap;
    use crate::learners::LearnerKind;
    use crate::policy::vertex;
    use crate::projection::is_implementable;
    use crate::zoo::{MatchingPennies, TradeComm, HEAD, SAME, TAIL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn compile(g: &ProductGame<f64>, m: &InformationMap) -> InfoPartition {
        InfoPartition::compile(g, m).unwrap()
    }

    fn rm() -> LearnerSpec {
        LearnerSpec::new(LearnerKind::RegretMatching)
    }

    #[test]
    fn merged_pair_penalty_by_hand() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let (x, rx) = (compile(&mp.game, &mp.original), compile(&mp.game, &mp.relaxed));
        // Bob plays HEAD after SAME and TAIL after DIFFERENT; Alice is uniform.
        let mu = BehavioralPolicy::from_fn(&rx, |i, g| {
            if i == 0 {
                vec![0.5, 0.5]
            } else {
                let node = rx.members[1][g][0];
                let state = mp.game.nature_of(1, node);
                vertex(3, if state == SAME { HEAD } else { TAIL })
            }
        });
        let gamma = Projector::new(&mp.game, &x, &rx, &mu.floored(SUPPORT_FLOOR)).project(&mu).unwrap();
        assert_eq!(gamma.row(1, 0), &[0.5, 0.5, 0.0]);
        for h in mp.game.histories() {
            let pen = penalty_term(&mp.game, &x, &rx, 0.05, &mu, &gamma, 1, &h).unwrap();
            assert!((pen - 0.025).abs() < 1e-15, "{pen}");
            assert_eq!(penalty_term(&mp.game, &x, &rx, 0.0, &mu, &gamma, 1, &h).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_penalty_or_no_relaxation_gives_counterfactual_rewards() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let (x, rx) = (compile(&mp.game, &mp.original), compile(&mp.game, &mp.relaxed));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let mu = BehavioralPolicy::random(&rx, &mut rng);
            let nu = BehavioralPolicy::random(&x, &mut rng);
            for i in 0..2 {
                for g in 0..rx.num_labels(i) {
                    let theta = local_reward_vector(&mp.game, &x, &rx, &mu, 0.0, 0, i, g).unwrap();
                    assert_eq!(theta, counterfactual_rewards(&mp.game, &rx, &mu, i, g).unwrap());
                }
                for g in 0..x.num_labels(i) {
                    let theta = local_reward_vector(&mp.game, &x, &x, &nu, 0.7, 0, i, g).unwrap();
                    assert_eq!(theta, counterfactual_rewards(&mp.game, &x, &nu, i, g).unwrap());
                }
            }
        }
    }

    #[test]
    fn local_criterion_matches_reward_vector_and_is_affine() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let (x, rx) = (compile(&mp.game, &mp.original), compile(&mp.game, &mp.relaxed));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mu = BehavioralPolicy::random(&rx, &mut rng);
            for i in 0..2 {
                for g in 0..rx.num_labels(i) {
                    let a = rx.actions(i);
                    let theta = local_reward_vector(&mp.game, &x, &rx, &mu, 0.3, 0, i, g).unwrap();
                    let u = crate::learners::dirichlet_draw::<f64>(a, &mut rng);
                    let v = crate::learners::dirichlet_draw::<f64>(a, &mut rng);
                    let mid: Vec<f64> = u.iter().zip(&v).map(|(p, q)| 0.5 * p + 0.5 * q).collect();
                    let f = |z: &[f64]| local_criterion(&mp.game, &x, &rx, &mu, 0.3, 0, i, g, z).unwrap();
                    assert!((f(&mid) - 0.5 * f(&u) - 0.5 * f(&v)).abs() < 1e-10);
                    let inner: f64 = u.iter().zip(&theta).map(|(p, t)| p * t).sum();
                    assert!((f(&u) - inner).abs() < 1e-10);
                }
            }
        }
    }

    fn traces(sampling: Sampling, kind: LearnerKind, lambda: f64) -> (Vec<IterationRecord<f64>>, Vec<IterationRecord<f64>>) {
        let tc = TradeComm::new(2, 2).build::<f64>().unwrap();
        let x = compile(&tc.game, &tc.original);
        let spec = LearnerSpec::new(kind);
        let mut cfg = CfrConfig::new(spec);
        cfg.sampling = sampling;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cfr = Cfr::new(&tc.game, &x, cfg).unwrap();
        cfr.randomize(&mut rng);
        let a: Vec<_> = (0..60).map(|_| cfr.iterate(&mut rng).unwrap()).collect();
        let mut pcfg = PhConfig::new(spec, PenaltySchedule::Constant(lambda));
        pcfg.sampling = sampling;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ph = ProgressiveHiding::new(&tc.game, &x, &x, pcfg).unwrap();
        ph.randomize(&mut rng);
        let b: Vec<_> = (0..60).map(|_| ph.iterate(&mut rng).unwrap()).collect();
        (a, b)
    }

    #[test]
    fn no_relaxation_reduces_to_cfr_bitwise() {
        for sampling in [Sampling::Exact, Sampling::Outcome { exploration: 0.1 }] {
            for kind in [LearnerKind::RegretMatching, LearnerKind::FtrlEntropic] {
                let (a, b) = traces(sampling, kind, 0.0);
                assert_eq!(a, b);
                let (a, b) = traces(sampling, kind, 0.5);
                for (r, s) in a.iter().zip(&b) {
                    assert_eq!((r.t, r.expected_payoff_projected, r.penalty_mass), (s.t, s.expected_payoff_projected, s.penalty_mass));
                    assert_eq!(r.sum_pos_local_regret, s.sum_pos_local_regret);
                    assert_eq!(s.lambda_t, 0.5);
                }
            }
        }
    }

    #[test]
    fn outputs_are_implementable_and_bounds_hold() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let (x, rx) = (compile(&mp.game, &mp.original), compile(&mp.game, &mp.relaxed));
        let mut cfg = PhConfig::new(rm(), PenaltySchedule::Constant(0.05));
        cfg.audit = true;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ph = ProgressiveHiding::new(&mp.game, &x, &rx, cfg).unwrap();
        ph.randomize(&mut rng);
        for _ in 0..200 {
            ph.iterate(&mut rng).unwrap();
            let lifted = Projector::new(&mp.game, &x, &rx, &BehavioralPolicy::uniform(&rx)).lift(ph.projected_policy());
            assert!(is_implementable(&x, &rx, &lifted));
        }
        let report = ph.report().unwrap();
        assert!(report.perfect_recall);
        assert_eq!(report.regret_bound_holds, Some(true), "{report:?}");
        assert!(report.penalty_bound_holds);
    }

    #[test]
    fn audit_realized_matches_auxiliary_payoff() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let (x, rx) = (compile(&mp.game, &mp.original), compile(&mp.game, &mp.relaxed));
        let mut cfg = PhConfig::new(rm(), PenaltySchedule::Constant(0.4));
        cfg.audit = true;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ph = ProgressiveHiding::new(&mp.game, &x, &rx, cfg).unwrap();
        ph.randomize(&mut rng);
        let mu = ph.learners.decide(&rx, &ph.fixed);
        ph.iterate(&mut rng).unwrap();
        let gamma = ph.projected_policy().clone();
        let expected = auxiliary_payoff(&mp.game, &x, &rx, &mu, &gamma, &mu, 0.4, 0);
        assert!((ph.audit.as_ref().unwrap().realized - expected).abs() < 1e-12);
        // Leaf accumulator against a deterministic comparator.
        let det = BehavioralPolicy::random_deterministic(&rx, &mut rng);
        let choices: Vec<Vec<usize>> = (0..2)
            .map(|i| (0..rx.num_labels(i)).map(|g| det.row(i, g).iter().position(|&p| p == 1.0).unwrap()).collect())
            .collect();
        let via_leaf = crate::oracle::deterministic_value(&mp.game, &rx, 0, &ph.audit.as_ref().unwrap().leaf, &choices);
        let direct = auxiliary_payoff(&mp.game, &x, &rx, &mu, &gamma, &det, 0.4, 0);
        assert!((via_leaf - direct).abs() < 1e-12);
    }

    #[test]
    fn schedules() {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let x = compile(&mp.game, &mp.original);
        let mut cfg = PhConfig::new(rm(), PenaltySchedule::LinearRamp { initial: 1.0 });
        assert!(ProgressiveHiding::new(&mp.game, &x, &x, cfg).is_err());
        cfg.horizon = Some(4);
        let mut ph = ProgressiveHiding::new(&mp.game, &x, &x, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ramp: Vec<f64> = (0..4).map(|_| ph.iterate(&mut rng).unwrap().lambda_t).collect();
        assert_eq!(ramp, vec![0.25, 0.5, 0.75, 1.0]);
        cfg.schedule = PenaltySchedule::PayoffController { initial: 1.0, target: 2.0 };
        let mut ph = ProgressiveHiding::new(&mp.game, &x, &x, cfg).unwrap();
        ph.iterate(&mut rng).unwrap();
        assert!((ph.iterate(&mut rng).unwrap().lambda_t - 1.0 / 1.1).abs() < 1e-15);
        cfg.schedule = PenaltySchedule::Constant(-1.0);
        assert!(ProgressiveHiding::new(&mp.game, &x, &x, cfg).is_err());
    }
}
