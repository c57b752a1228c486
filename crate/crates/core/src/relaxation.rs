//! Resolution by information relaxation.
//!
//! The team player optimizes on a finer map, paying `λ` times the base-weighted
//! squared distance to the projection onto the original map. Each round projects the
//! current profile, then takes a proximal step: the best relaxed profile for expected
//! reward minus `λ‖μ − γ‖²`. The objective `ℒ(μ) = 𝔼_μ[r] − λ‖μ − Proj(μ)‖²` never
//! decreases along the rounds.
//!
//! The proximal step is solved by reverse sweeps over the player's stages. Labels of
//! one stage do not interact, so a whole stage is optimized at once: each label solves
//! a concave quadratic over its simplex exactly. Sweeps repeat until no stage moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{PlayerId, ProductGame};
use crate::info::{is_finer, perfect_recall_failure, InfoPartition};
use crate::measure::{continuation_values, expected_reward, prefix_reach};
use crate::policy::BehavioralPolicy;
use crate::projection::Projector;
use crate::simplex::maximize_concave_quadratic;
use crate::scalar::Scalar;

/// How the proximal step is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxMode {
    /// Needs perfect recall on the relaxed map; sweeps until converged.
    BackwardInduction,
    /// Any map; at most [`COORDINATE_SWEEPS`] sweeps, and the result may be a local
    /// optimum only.
    CoordinateAscent,
}

pub const COORDINATE_SWEEPS: usize = 50;
pub const INDUCTION_SWEEPS: usize = 1000;
/// A sweep improving the proximal objective by less than this ends the step.
pub const SWEEP_TOLERANCE: f64 = 1e-13;

pub struct RelaxationProblem<'a, S> {
    game: &'a ProductGame<S>,
    fine: &'a InfoPartition,
    player: PlayerId,
    lambda: S,
    projector: Projector<'a, S>,
}

impl<'a, S: Scalar> RelaxationProblem<'a, S> {
    /// Problem with the uniform base profile.
    pub fn new(
        game: &'a ProductGame<S>,
        coarse: &'a InfoPartition,
        fine: &'a InfoPartition,
        player: PlayerId,
        lambda: S,
    ) -> Result<Self> {
        Self::with_base(game, coarse, fine, player, lambda, &BehavioralPolicy::uniform(fine))
    }

    /// Problem whose projector and distance weights come from `base`, which must give
    /// every prefix positive probability.
    pub fn with_base(
        game: &'a ProductGame<S>,
        coarse: &'a InfoPartition,
        fine: &'a InfoPartition,
        player: PlayerId,
        lambda: S,
        base: &BehavioralPolicy<S>,
    ) -> Result<Self> {
        if !is_finer(fine, coarse) {
            return Err(Error::NotFiner(crate::info::refinement_failure(fine, coarse).unwrap_or(0)));
        }
        if !(lambda > S::zero() && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("penalty weight must be positive, got {lambda}")));
        }
        if player >= game.num_players() {
            return Err(Error::InvalidParameter(format!("no player {player}")));
        }
        base.check(fine)?;
        if base.rows().iter().flatten().flatten().any(|&p| !(p > S::zero())) {
            return Err(Error::InvalidParameter("base profile must have full support".into()));
        }
        Ok(Self {
            game,
            fine,
            player,
            lambda,
            projector: Projector::new(game, coarse, fine, base),
        })
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    pub fn project(&self, policy: &BehavioralPolicy<S>) -> Result<BehavioralPolicy<S>> {
        self.projector.project(policy)
    }

    /// `λ‖μ − γ‖²` weighted by the base, over the player's stages.
    pub fn penalty(&self, policy: &BehavioralPolicy<S>, projected: &BehavioralPolicy<S>) -> S {
        self.lambda * self.projector.weighted_sq_distance(self.player, policy, projected)
    }

    /// `𝔼_μ[r_p] − λ‖μ − Proj(μ)‖²`.
    pub fn lagrangian(&self, policy: &BehavioralPolicy<S>) -> Result<S> {
        let gamma = self.project(policy)?;
        Ok(self.reward(policy) - self.penalty(policy, &gamma))
    }

    fn reward(&self, policy: &BehavioralPolicy<S>) -> S {
        expected_reward(self.game, self.fine, policy, self.player)
    }

    /// `𝔼_μ[r_p] − λ‖μ − γ‖²`.
    pub fn proximal_objective(&self, policy: &BehavioralPolicy<S>, projected: &BehavioralPolicy<S>) -> S {
        self.reward(policy) - self.penalty(policy, projected)
    }

    /// Approximately maximizes the proximal objective around `projected`, starting
    /// from `start` and from the lift of `projected`, and keeping the better result.
    /// The returned profile never scores below `start`.
    pub fn proximal_step(
        &self,
        projected: &BehavioralPolicy<S>,
        start: &BehavioralPolicy<S>,
        mode: ProxMode,
    ) -> Result<ProxOutcome<S>> {
        let sweeps = match mode {
            ProxMode::BackwardInduction => {
                if let Some((earlier, later)) = perfect_recall_failure(self.game, self.fine, self.player) {
                    return Err(Error::PerfectRecallRequired {
                        player: self.player,
                        earlier,
                        later,
                    });
                }
                INDUCTION_SWEEPS
            }
            ProxMode::CoordinateAscent => COORDINATE_SWEEPS,
        };
        let lifted = self.projector.lift(projected);
        let lifted = BehavioralPolicy::from_fn(self.fine, |i, g| {
            if self.game.player_of(i) == self.player {
                lifted.row(i, g).to_vec()
            } else {
                start.row(i, g).to_vec()
            }
        });
        let targets = self.targets(projected);
        let mut best: Option<ProxOutcome<S>> = None;
        for init in [start, &lifted] {
            let outcome = self.ascend(init.clone(), &targets, projected, sweeps)?;
            if best.as_ref().is_none_or(|b| outcome.objective > b.objective) {
                best = Some(outcome);
            }
        }
        let mut best = best.expect("two starts");
        let start_objective = self.proximal_objective(start, projected);
        if best.objective < start_objective {
            best = ProxOutcome {
                policy: start.clone(),
                objective: start_objective,
                sweeps: 0,
                converged: best.converged,
            };
        }
        best.converged &= mode == ProxMode::BackwardInduction;
        Ok(best)
    }

    /// `targets[i][g] = (W(g), γ̄(g))`: base mass of each fine label of the player and
    /// the base-weighted average of the coarse rows it sees.
    fn targets(&self, projected: &BehavioralPolicy<S>) -> Vec<Vec<(S, Vec<S>)>> {
        let reach = self.projector.reach();
        (0..self.game.num_stages())
            .map(|i| {
                if self.game.player_of(i) != self.player {
                    return Vec::new();
                }
                let mut mass = vec![S::zero(); self.fine.num_labels(i)];
                for (node, &w) in reach[i].iter().enumerate() {
                    let g = self.fine.label_of(i, node);
                    mass[g] = mass[g] + w;
                }
                mass.into_iter()
                    .enumerate()
                    .map(|(g, w)| (w, self.projector.lifted_row(projected, i, g)))
                    .collect()
            })
            .collect()
    }

    fn ascend(
        &self,
        mut policy: BehavioralPolicy<S>,
        targets: &[Vec<(S, Vec<S>)>],
        projected: &BehavioralPolicy<S>,
        max_sweeps: usize,
    ) -> Result<ProxOutcome<S>> {
        let (game, fine) = (self.game, self.fine);
        let own = game.stages_of(self.player);
        let mut objective = self.proximal_objective(&policy, projected);
        let tolerance = S::of(SWEEP_TOLERANCE);
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < max_sweeps {
            sweeps += 1;
            let reach = prefix_reach(game, fine, &policy);
            let mut values = continuation_values(game, fine, &policy, game.rewards_of(self.player));
            for &i in own.iter().rev() {
                let a = game.actions(i);
                let mut linear = vec![vec![S::zero(); a]; fine.num_labels(i)];
                for (node, &w) in reach[i].iter().enumerate() {
                    let row = &mut linear[fine.label_of(i, node)];
                    for (k, c) in row.iter_mut().enumerate() {
                        *c = *c + w * values[i + 1][node * a + k];
                    }
                }
                let rows: Vec<Vec<S>> = linear
                    .iter()
                    .zip(&targets[i])
                    .map(|(c, (w, center))| maximize_concave_quadratic(c, center, self.lambda * *w))
                    .collect();
                policy = policy.modify(fine, i, rows)?;
                // Refresh values down to depth i so earlier stages see the new rows.
                let fresh = continuation_values(game, fine, &policy, game.rewards_of(self.player));
                values[..=i].clone_from_slice(&fresh[..=i]);
            }
            let next = self.proximal_objective(&policy, projected);
            let gain = next - objective;
            objective = next;
            if gain < tolerance {
                converged = true;
                break;
            }
        }
        Ok(ProxOutcome {
            policy,
            objective,
            sweeps,
            converged,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxOutcome<S> {
    pub policy: BehavioralPolicy<S>,
    /// Proximal objective of `policy`.
    pub objective: S,
    pub sweeps: usize,
    /// True when sweeps stopped moving under perfect recall; false for coordinate
    /// ascent, whose result may be a local optimum.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RirOutcome<S> {
    /// Relaxed profile after the last proximal step.
    pub policy: BehavioralPolicy<S>,
    /// Its projection: the implementable output.
    pub projected: BehavioralPolicy<S>,
    /// `ℒ` of the initial profile followed by `ℒ` after every round.
    pub trace: Vec<S>,
    /// Some proximal step may have stopped at a local optimum.
    pub local_only: bool,
}

/// `rounds` rounds of projection followed by a proximal step, from `init`.
pub fn rir_run<S: Scalar>(
    problem: &RelaxationProblem<'_, S>,
    init: &BehavioralPolicy<S>,
    rounds: usize,
    mode: ProxMode,
) -> Result<RirOutcome<S>> {
    init.check(problem.fine)?;
    let mut policy = init.clone();
    let mut trace = vec![problem.lagrangian(&policy)?];
    let mut local_only = false;
    for _ in 0..rounds {
        let gamma = problem.project(&policy)?;
        let step = problem.proximal_step(&gamma, &policy, mode)?;
        local_only |= !step.converged;
        policy = step.policy;
        trace.push(problem.lagrangian(&policy)?);
    }
    let projected = problem.project(&policy)?;
    Ok(RirOutcome {
        policy,
        projected,
        trace,
        local_only,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::expected_reward;
    use crate::oracle::best_response_value;
    use crate::policy::vertex;
    use crate::projection::is_implementable;
    use crate::zoo::{MatchingPennies, TradeComm, HEAD, SAME, TAIL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mp() -> (crate::zoo::MatchingPenniesGame<f64>, InfoPartition, InfoPartition) {
        let mp = MatchingPennies::default().build::<f64>().unwrap();
        let x = InfoPartition::compile(&mp.game, &mp.original).unwrap();
        let rx = InfoPartition::compile(&mp.game, &mp.relaxed).unwrap();
        (mp, x, rx)
    }

    #[test]
    fn requires_a_finer_map_and_positive_weight() {
        let (m, x, rx) = mp();
        assert!(RelaxationProblem::new(&m.game, &rx, &x, 0, 1.0).is_err());
        assert!(RelaxationProblem::new(&m.game, &x, &rx, 0, 0.0).is_err());
    }

    #[test]
    fn lagrangian_of_the_nature_matching_rule() {
        let (m, x, rx) = mp();
        let problem = RelaxationProblem::new(&m.game, &x, &rx, 0, 0.5).unwrap();
        let mu = BehavioralPolicy::from_fn(&rx, |i, g| {
            if i == 0 {
                vec![0.5, 0.5]
            } else {
                let node = rx.members[1][g][0];
                let alice = m.game.parent(1, node).1;
                vertex(3, if m.game.nature_of(1, node) == SAME { alice } else { 1 - alice })
            }
        });
        // Bob wins for sure; the projection averages his two rows into (½, ½, 0), and
        // every stage-1 prefix has base mass ¼ at distance ½.
        let expected = 1.0 - 0.5 * 4.0 * 0.25 * 0.5;
        assert!((problem.lagrangian(&mu).unwrap() - expected).abs() < 1e-12);
        let implementable = problem.project(&mu).unwrap();
        let lifted = problem.projector.lift(&implementable);
        let value = expected_reward(&m.game, &rx, &lifted, 0);
        assert!((problem.lagrangian(&lifted).unwrap() - value).abs() < 1e-15);
    }

    #[test]
    fn proximal_step_limits() {
        let (m, x, rx) = mp();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gamma = BehavioralPolicy::random(&x, &mut rng);
        let start = BehavioralPolicy::random(&rx, &mut rng);
        let tiny = RelaxationProblem::new(&m.game, &x, &rx, 0, 1e-9).unwrap();
        let step = tiny.proximal_step(&gamma, &start, ProxMode::BackwardInduction).unwrap();
        assert!((expected_reward(&m.game, &rx, &step.policy, 0) - 1.0).abs() < 1e-6);
        assert!(step.converged);
        let huge = RelaxationProblem::new(&m.game, &x, &rx, 0, 1e6).unwrap();
        let step = huge.proximal_step(&gamma, &start, ProxMode::BackwardInduction).unwrap();
        assert!(huge.projector.weighted_sq_distance(0, &step.policy, &gamma) < 1e-3);
        assert!(step.objective >= huge.proximal_objective(&start, &gamma) - 1e-12);
    }

    #[test]
    fn optimal_implementable_profile_is_a_fixed_point() {
        let (m, x, rx) = mp();
        let problem = RelaxationProblem::new(&m.game, &x, &rx, 0, 0.5).unwrap();
        let gamma = BehavioralPolicy::from_fn(&x, |i, g| {
            if i == 0 {
                let state = m.game.nature()[x.members[0][g][0]].coords[0];
                vertex(2, if state == SAME { HEAD } else { TAIL })
            } else {
                // HEAD means SAME, so copy it; TAIL means DIFFERENT, so differ from it.
                vertex(3, HEAD)
            }
        });
        let lifted = problem.projector.lift(&gamma);
        let step = problem.proximal_step(&gamma, &lifted, ProxMode::BackwardInduction).unwrap();
        assert!(step.policy.max_abs_diff(&lifted) < 1e-12, "{:?} vs {:?}", step.policy, lifted);
        assert!((step.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn traces_never_decrease_and_outputs_are_implementable() {
        let (m, x, rx) = mp();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for lambda in [0.05, 0.5, 5.0] {
            let problem = RelaxationProblem::new(&m.game, &x, &rx, 0, lambda).unwrap();
            for _ in 0..10 {
                let init = BehavioralPolicy::random(&rx, &mut rng);
                let run = rir_run(&problem, &init, 20, ProxMode::BackwardInduction).unwrap();
                assert!(run.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", run.trace);
                let lifted = problem.projector.lift(&run.projected);
                assert!(is_implementable(&x, &rx, &lifted));
                // The implementable optimum is 1, so the best ℒ is at least 1; here we only
                // check that ℒ stays below the relaxed optimum.
                assert!(*run.trace.last().unwrap() <= 1.0 + 1e-12);
            }
        }
        let zero = rir_run(
            &RelaxationProblem::new(&m.game, &x, &rx, 0, 1.0).unwrap(),
            &BehavioralPolicy::uniform(&rx),
            0,
            ProxMode::BackwardInduction,
        )
        .unwrap();
        assert_eq!(zero.trace.len(), 1);
        assert_eq!(zero.policy, BehavioralPolicy::uniform(&rx));
    }

    #[test]
    fn coordinate_ascent_without_perfect_recall() {
        let tc = TradeComm::new(2, 2).build::<f64>().unwrap();
        let x = InfoPartition::compile(&tc.game, &tc.original).unwrap();
        let problem = RelaxationProblem::new(&tc.game, &x, &x, 0, 1.0).unwrap();
        let init = BehavioralPolicy::uniform(&x);
        let gamma = problem.project(&init).unwrap();
        assert!(matches!(
            problem.proximal_step(&gamma, &init, ProxMode::BackwardInduction),
            Err(Error::PerfectRecallRequired { .. })
        ));
        let run = rir_run(&problem, &init, 3, ProxMode::CoordinateAscent).unwrap();
        assert!(run.local_only);
        assert!(run.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(*run.trace.last().unwrap() <= best_response_value(&tc.game, &x, 0, &init).unwrap() + 1e-12);
    }
}
