//! The acceptance criteria, each a list of named checks with pinned tolerances.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use phide_core::info::has_perfect_recall;
use phide_core::measure::expected_reward;
use phide_core::oracle::best_response_value;
use phide_core::projection::is_implementable;
use phide_core::zoo::{random_game, MatchingPennies, RandomCaps, TradeComm};
use phide_core::{
    rir_run, BehavioralPolicy, Cfr, CfrConfig, InfoPartition, LearnerKind, LearnerSpec, PenaltySchedule, PhConfig,
    ProgressiveHiding, Projector, ProxMode, RelaxationProblem, Sampling,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Algorithm, ExperimentConfig, Mode, ScheduleKind};
use crate::experiment::{run_experiment, write_runs_csv, RunRecord};
use crate::games::LoadedGame;

pub const CRITERIA: [usize; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

pub const PROJECTOR_TOLERANCE: f64 = 1e-12;
pub const PROJECTOR_GAMES: u64 = 200;
pub const MONOTONE_TOLERANCE: f64 = 1e-9;
pub const MONOTONE_INITS: usize = 100;
pub const MONOTONE_ROUNDS: usize = 30;
pub const MONOTONE_LAMBDAS: [f64; 3] = [0.05, 0.5, 5.0];
pub const REDUCTION_SEEDS: u64 = 3;
pub const REDUCTION_ITERATIONS: usize = 200;
pub const BOUND_ITERATIONS: usize = 200;
pub const BOUND_SLACK: f64 = 1e-9;
pub const MP_ITERATIONS: usize = 400;
pub const MP_REPEATS: usize = 200;
pub const MP_LAMBDA: f64 = 0.05;
pub const MP_THRESHOLD: f64 = 0.95;
pub const MP_CFR_MAX_SUCCESS: f64 = 0.05;
pub const MP_PH_MIN_SUCCESS: f64 = 0.30;
pub const TC_ITERATIONS: usize = 1000;
pub const TC_REPEATS: usize = 100;
pub const TC_TUNING_REPEATS: usize = 20;
pub const TC_LAMBDA_GRID: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
pub const TC_SCHEDULES: [ScheduleKind; 2] = [ScheduleKind::Constant, ScheduleKind::Ramp];
pub const TC_MARGIN: f64 = 0.05;
pub const VALUE_TOLERANCE: f64 = 1e-12;
pub const CFR_ITERATIONS: usize = 5000;
pub const CFR_TOLERANCE: f64 = 0.01;

/// Oracle value of Trade Comm with three items and two messages on the original map.
/// Derived once with `phide value --game trade_comm:n=3,m=2`.
pub const TRADE_COMM_3_2_VALUE: f64 = 0.5555555555555556;

/// Master seed of the held-out evaluation runs; tuning runs use a different one.
const EVALUATION_SEED: u64 = 2024;
const TUNING_SEED: u64 = 77;

const MAX_LISTED_CHECKS: usize = 6;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line: verdict, title, time and the checks (only failing ones when there
    /// are many).
    pub fn line(&self) -> String {
        let mut s = format!(
            "criterion {} [{}] {} ({:.1}s):",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64()
        );
        if let Some(e) = &self.error {
            let _ = write!(s, " error: {e}");
        }
        let shown: Vec<&Check> = if self.checks.len() <= MAX_LISTED_CHECKS {
            self.checks.iter().collect()
        } else {
            let passed = self.checks.iter().filter(|c| c.passed).count();
            let _ = write!(s, " {passed}/{} checks passed;", self.checks.len());
            self.failed_checks().collect()
        };
        for c in shown {
            let _ = write!(s, " {}{} {};", if c.passed { "" } else { "!" }, c.name, c.detail);
        }
        s
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn runtime(&mut self, started: Instant, budget_secs: u64) {
        let secs = started.elapsed().as_secs_f64();
        self.add("runtime", secs < budget_secs as f64, format!("{secs:.1}s < {budget_secs}s"));
    }
}

pub fn title(id: usize) -> &'static str {
    match id {
        1 => "projector laws on random games",
        2 => "relaxation rounds never lower the Lagrangian",
        3 => "progressive hiding on the original map reduces to CFR",
        4 => "regret bound over deterministic relaxed policies",
        5 => "average penalty bound",
        6 => "matching pennies success rates",
        7 => "trade comm relaxations beat the baseline",
        8 => "optimal values",
        9 => "exact CFR reaches the trade comm optimum",
        _ => "unknown criterion",
    }
}

/// Runs one criterion; errors become a failed outcome.
pub fn check(id: usize) -> Outcome {
    let started = Instant::now();
    let mut checks = Checks(Vec::new());
    let result = match id {
        1 => projector_laws(&mut checks),
        2 => monotone_relaxation(&mut checks),
        3 => reduction(&mut checks),
        4 => regret_bounds(&mut checks, true),
        5 => regret_bounds(&mut checks, false),
        6 => matching_pennies_replication(&mut checks),
        7 => trade_comm_replication(&mut checks),
        8 => optimal_values(&mut checks),
        9 => cfr_sanity(&mut checks),
        _ => Err(anyhow::anyhow!("no criterion {id}")),
    };
    Outcome {
        id,
        title: title(id),
        checks: checks.0,
        error: result.err().map(|e| format!("{e:#}")),
        elapsed: started.elapsed(),
    }
}

fn load(selector: &str) -> anyhow::Result<LoadedGame> {
    selector.parse::<crate::games::GameSelector>()?.load()
}

fn partitions(loaded: &LoadedGame, fine: &str) -> anyhow::Result<(InfoPartition, InfoPartition)> {
    Ok((
        InfoPartition::compile(&loaded.game, loaded.map(&loaded.original)?)?,
        InfoPartition::compile(&loaded.game, loaded.map(fine)?)?,
    ))
}

/// The two games with a perfect-recall relaxation, by selector and relaxed map.
const RELAXED_GAMES: [(&str, &str); 2] = [("matching_pennies", "relaxed"), ("trade_comm:n=2,m=2", "perfect_recall")];

fn projector_laws(checks: &mut Checks) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut prop1, mut prop2, mut cases, mut implementable) = (0usize, 0usize, 0usize, 0usize);
    let mut worst_idempotence = 0.0f64;
    for seed in 0..PROJECTOR_GAMES {
        let g = random_game::<f64>(seed, RandomCaps::default())?;
        let coarse = InfoPartition::compile(&g.game, &g.coarse)?;
        let fine = InfoPartition::compile(&g.game, &g.fine)?;
        let projector = Projector::new(&g.game, &coarse, &fine, &BehavioralPolicy::random(&fine, &mut rng));
        let free = BehavioralPolicy::random(&fine, &mut rng);
        let candidates = [
            projector.lift(&projector.project(&free)?),
            projector.lift(&BehavioralPolicy::random(&coarse, &mut rng)),
            projector.lift(&BehavioralPolicy::random_deterministic(&coarse, &mut rng)),
            BehavioralPolicy::random_deterministic(&fine, &mut rng),
            free,
        ];
        for mu in &candidates {
            cases += 1;
            let gamma = projector.project(mu)?;
            let fixed = projector.lift(&gamma).max_abs_diff(mu) <= PROJECTOR_TOLERANCE;
            let feasible = is_implementable(&coarse, &fine, mu);
            implementable += feasible as usize;
            prop1 += (fixed != feasible) as usize;
            let again = projector.project(&projector.lift(&gamma))?.max_abs_diff(&gamma);
            worst_idempotence = worst_idempotence.max(again);
            prop2 += (again > PROJECTOR_TOLERANCE) as usize;
        }
    }
    checks.add(
        "implementable iff fixed point",
        prop1 == 0,
        format!("{prop1} mismatches in {cases} policies ({implementable} implementable)"),
    );
    checks.add(
        "idempotence",
        prop2 == 0,
        format!("worst {worst_idempotence:.1e} <= {PROJECTOR_TOLERANCE:.0e}"),
    );
    checks.runtime(started, 30);
    Ok(())
}

fn monotone_relaxation(checks: &mut Checks) -> anyhow::Result<()> {
    let started = Instant::now();
    for (selector, relaxed) in RELAXED_GAMES {
        let loaded = load(selector)?;
        let (coarse, fine) = partitions(&loaded, relaxed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut worst_drop, mut runs, mut local) = (0.0f64, 0usize, 0usize);
        for lambda in MONOTONE_LAMBDAS {
            let problem = RelaxationProblem::new(&loaded.game, &coarse, &fine, 0, lambda)?;
            for _ in 0..MONOTONE_INITS {
                let init = BehavioralPolicy::random(&fine, &mut rng);
                let out = rir_run(&problem, &init, MONOTONE_ROUNDS, ProxMode::BackwardInduction)?;
                for w in out.trace.windows(2) {
                    worst_drop = worst_drop.max(w[0] - w[1]);
                }
                runs += 1;
                local += out.local_only as usize;
            }
        }
        checks.add(
            format!("{selector} non-decreasing"),
            worst_drop <= MONOTONE_TOLERANCE,
            format!("largest drop {worst_drop:.1e} over {runs} runs, {local} hit the sweep cap"),
        );
    }
    checks.runtime(started, 120);
    Ok(())
}

fn csv_bytes(records: &[RunRecord]) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    write_runs_csv(&mut out, records)?;
    Ok(out)
}

/// Drops the last column, which records the penalty weight.
fn without_lambda(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn reduction(checks: &mut Checks) -> anyhow::Result<()> {
    for game in ["matching_pennies", "trade_comm:n=2,m=2"] {
        for learner in [LearnerKind::RegretMatching, LearnerKind::RegretMatchingPlus, LearnerKind::FtrlEntropic] {
            for mode in [Mode::Exact, Mode::Mc] {
                let base = ExperimentConfig {
                    game: game.into(),
                    relaxed_map: "original".into(),
                    learner,
                    mode,
                    iterations: REDUCTION_ITERATIONS,
                    repeats: REDUCTION_SEEDS as usize,
                    randomize_init: true,
                    seed: 3,
                    ..ExperimentConfig::default()
                };
                let cfr = csv_bytes(&run_experiment(&ExperimentConfig {
                    algorithm: Algorithm::Cfr,
                    ..base.clone()
                })?)?;
                let unpenalized = csv_bytes(&run_experiment(&ExperimentConfig {
                    algorithm: Algorithm::Ph,
                    lambda: 0.0,
                    ..base.clone()
                })?)?;
                let penalized = csv_bytes(&run_experiment(&ExperimentConfig {
                    algorithm: Algorithm::Ph,
                    lambda: 0.5,
                    ..base.clone()
                })?)?;
                let name = format!("{game} {learner} {mode:?}");
                checks.add(
                    format!("{name} zero weight"),
                    cfr == unpenalized,
                    "CSV bytes equal",
                );
                checks.add(
                    format!("{name} positive weight"),
                    without_lambda(&cfr) == without_lambda(&penalized),
                    "CSV bytes equal outside lambda_t",
                );
            }
        }
    }
    Ok(())
}

/// Criterion 4 checks the regret bound, criterion 5 the penalty bound, on the same runs.
fn regret_bounds(checks: &mut Checks, regret: bool) -> anyhow::Result<()> {
    let started = Instant::now();
    for (selector, relaxed) in RELAXED_GAMES {
        let loaded = load(selector)?;
        let (coarse, fine) = partitions(&loaded, relaxed)?;
        if !has_perfect_recall(&loaded.game, &fine, 0) {
            anyhow::bail!("{selector} {relaxed} lacks perfect recall");
        }
        for learner in [LearnerKind::RegretMatching, LearnerKind::FtrlEntropic] {
            for schedule in [
                PenaltySchedule::Constant(0.05),
                PenaltySchedule::Constant(5.0),
                PenaltySchedule::LinearRamp { initial: 0.5 },
            ] {
                let mut ph = ProgressiveHiding::new(
                    &loaded.game,
                    &coarse,
                    &fine,
                    PhConfig {
                        learner: LearnerSpec::new(learner),
                        sampling: Sampling::Exact,
                        schedule,
                        player: 0,
                        horizon: Some(BOUND_ITERATIONS),
                        audit: true,
                    },
                )?;
                let mut rng = ChaCha8Rng::seed_from_u64(4);
                ph.randomize(&mut rng);
                for _ in 0..BOUND_ITERATIONS {
                    ph.iterate(&mut rng)?;
                }
                let report = ph.report()?;
                let name = format!("{selector} {learner} {schedule:?}");
                if regret {
                    let bound = report.sum_positive + BOUND_SLACK;
                    match report.regret_lower_bound {
                        Some(lb) => checks.add(name, lb <= bound, format!("{lb:.3e} <= {bound:.3e}")),
                        None => checks.add(name, false, "enumeration over the cap"),
                    }
                } else {
                    let bound = report.sum_positive + 2.0 * report.max_abs_reward + BOUND_SLACK;
                    checks.add(
                        name,
                        report.penalty_average <= bound,
                        format!("{:.3e} <= {bound:.3e}", report.penalty_average),
                    );
                }
            }
        }
    }
    checks.runtime(started, 300);
    Ok(())
}

fn final_success(records: &[RunRecord], threshold: f64) -> f64 {
    records.iter().filter(|r| r.final_payoff() >= threshold).count() as f64 / records.len() as f64
}

fn final_mean(records: &[RunRecord]) -> f64 {
    records.iter().map(RunRecord::final_payoff).sum::<f64>() / records.len() as f64
}

/// Regret matching from the uniform profile with outcome sampling.
pub fn matching_pennies_config(algorithm: Algorithm) -> ExperimentConfig {
    ExperimentConfig {
        game: "matching_pennies".into(),
        algorithm,
        relaxed_map: match algorithm {
            Algorithm::Cfr => "original".into(),
            _ => "relaxed".into(),
        },
        lambda: MP_LAMBDA,
        iterations: MP_ITERATIONS,
        learner: LearnerKind::RegretMatching,
        mode: Mode::Mc,
        repeats: MP_REPEATS,
        seed: EVALUATION_SEED,
        threshold: MP_THRESHOLD,
        ..ExperimentConfig::default()
    }
}

fn matching_pennies_replication(checks: &mut Checks) -> anyhow::Result<()> {
    let started = Instant::now();
    let cfr = final_success(&run_experiment(&matching_pennies_config(Algorithm::Cfr))?, MP_THRESHOLD);
    let ph = final_success(&run_experiment(&matching_pennies_config(Algorithm::Ph))?, MP_THRESHOLD);
    checks.add(
        "cfr success",
        cfr <= MP_CFR_MAX_SUCCESS,
        format!("{:.1}% <= {:.0}%", 100.0 * cfr, 100.0 * MP_CFR_MAX_SUCCESS),
    );
    checks.add(
        "ph success",
        ph >= MP_PH_MIN_SUCCESS,
        format!("{:.1}% >= {:.0}%", 100.0 * ph, 100.0 * MP_PH_MIN_SUCCESS),
    );
    checks.runtime(started, 600);
    Ok(())
}

/// Entropic learners from random starting points for `TC_ITERATIONS` rounds.
pub fn trade_comm_config(game: &str, algorithm: Algorithm, relaxed_map: &str, lambda: f64) -> ExperimentConfig {
    ExperimentConfig {
        game: game.into(),
        algorithm,
        relaxed_map: relaxed_map.into(),
        lambda,
        iterations: TC_ITERATIONS,
        learner: LearnerKind::FtrlEntropic,
        repeats: TC_REPEATS,
        randomize_init: true,
        seed: EVALUATION_SEED,
        ..ExperimentConfig::default()
    }
}

/// Penalty schedule and weight from the grid with the best mean final payoff on
/// tuning seeds, which the evaluation never uses.
pub fn tune_penalty(game: &str, relaxed_map: &str) -> anyhow::Result<(ScheduleKind, f64)> {
    let mut best = (ScheduleKind::Constant, f64::NAN, f64::NEG_INFINITY);
    for schedule in TC_SCHEDULES {
        for lambda in TC_LAMBDA_GRID {
            let config = ExperimentConfig {
                schedule,
                repeats: TC_TUNING_REPEATS,
                seed: TUNING_SEED,
                ..trade_comm_config(game, Algorithm::Ph, relaxed_map, lambda)
            };
            let mean = final_mean(&run_experiment(&config)?);
            if mean > best.2 {
                best = (schedule, lambda, mean);
            }
        }
    }
    Ok((best.0, best.1))
}

fn trade_comm_replication(checks: &mut Checks) -> anyhow::Result<()> {
    let started = Instant::now();
    for game in ["trade_comm:n=2,m=2", "trade_comm:n=3,m=2"] {
        let baseline = final_mean(&run_experiment(&trade_comm_config(game, Algorithm::Cfr, "original", 0.0))?);
        for (map, margin) in [("perfect_recall", TC_MARGIN), ("cheat", 0.0)] {
            let (schedule, lambda) = tune_penalty(game, map)?;
            let config = ExperimentConfig {
                schedule,
                ..trade_comm_config(game, Algorithm::Ph, map, lambda)
            };
            let mean = final_mean(&run_experiment(&config)?);
            let (name, passed) = if margin > 0.0 {
                (format!("{game} {map} beats baseline by {margin}"), mean >= baseline + margin)
            } else {
                (format!("{game} {map} beats baseline"), mean > baseline)
            };
            checks.add(
                name,
                passed,
                format!("{mean:.4} vs {baseline:.4} with {schedule:?} lambda {lambda}"),
            );
        }
    }
    checks.runtime(started, 600);
    Ok(())
}

fn optimal_values(checks: &mut Checks) -> anyhow::Result<()> {
    let mut value = |name: &str, game: &phide_core::ProductGame, map: &phide_core::InformationMap, expected: f64| {
        let part = InfoPartition::compile(game, map)?;
        let v = best_response_value(game, &part, 0, &BehavioralPolicy::uniform(&part))?;
        checks.add(
            name,
            (v - expected).abs() <= VALUE_TOLERANCE,
            format!("{v:?} vs {expected:?}"),
        );
        anyhow::Ok(())
    };
    let tc = TradeComm::new(2, 2).build::<f64>()?;
    value("trade comm (2,2)", &tc.game, &tc.original, 1.0)?;
    let mp = MatchingPennies::default().build::<f64>()?;
    value("matching pennies", &mp.game, &mp.original, 1.0)?;
    let tc = TradeComm::new(3, 2).build::<f64>()?;
    value("trade comm (3,2) fixture", &tc.game, &tc.original, TRADE_COMM_3_2_VALUE)?;
    Ok(())
}

fn cfr_sanity(checks: &mut Checks) -> anyhow::Result<()> {
    let tc = TradeComm::new(2, 2).build::<f64>()?;
    let part = InfoPartition::compile(&tc.game, &tc.perfect_recall)?;
    let mut cfr = Cfr::new(&tc.game, &part, CfrConfig::new(LearnerSpec::new(LearnerKind::RegretMatching)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..CFR_ITERATIONS {
        cfr.iterate(&mut rng)?;
    }
    let value = expected_reward(&tc.game, &part, &cfr.average_policy(), 0);
    checks.add(
        "average policy value",
        (1.0 - value).abs() <= CFR_TOLERANCE,
        format!("{value:.5} within {CFR_TOLERANCE} of 1"),
    );
    Ok(())
}
