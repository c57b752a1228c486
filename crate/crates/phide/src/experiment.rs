//! Seeded batches of independent runs and their CSV form.

use std::io::{Read, Write};

use anyhow::{bail, Context};
use phide_core::measure::expected_reward;
use phide_core::{
    BehavioralPolicy, Cfr, CfrConfig, InfoPartition, IterationRecord, PhConfig, ProgressiveHiding,
    RelaxationProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig};
use crate::games::LoadedGame;

/// One run's trace.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub trace: Vec<IterationRecord<f64>>,
}

impl RunRecord {
    pub fn final_payoff(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.expected_payoff_projected)
    }
}

/// Seeds of the runs of a batch, drawn from the master seed.
pub fn run_seeds(master: u64, repeats: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..repeats).map(|_| rng.random()).collect()
}

/// Runs the whole batch; runs execute in parallel and come back in order.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<Vec<RunRecord>> {
    config.validate()?;
    let loaded = config.selector()?.load()?;
    let coarse = InfoPartition::compile(&loaded.game, loaded.map(&loaded.original)?)?;
    let fine = InfoPartition::compile(&loaded.game, loaded.map(&config.relaxed_map)?)?;
    run_seeds(config.seed, config.repeats)
        .into_par_iter()
        .enumerate()
        .map(|(run, seed)| {
            let trace = run_trace(config, &loaded, &coarse, &fine, seed)
                .with_context(|| format!("run {run} (seed {seed})"))?;
            Ok(RunRecord { run, seed, trace })
        })
        .collect()
}

/// One run with its own seed. `coarse` is the original map, `fine` the one played on.
pub fn run_trace(
    config: &ExperimentConfig,
    loaded: &LoadedGame,
    coarse: &InfoPartition,
    fine: &InfoPartition,
    seed: u64,
) -> anyhow::Result<Vec<IterationRecord<f64>>> {
    let game = &loaded.game;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = Some(config.iterations);
    let mut trace = Vec::with_capacity(config.iterations);
    match config.algorithm {
        Algorithm::Cfr => {
            let mut cfr = Cfr::new(
                game,
                fine,
                CfrConfig {
                    learner: config.learner_spec(),
                    sampling: config.sampling(),
                    horizon,
                    player: config.player,
                },
            )?;
            if config.randomize_init {
                cfr.randomize(&mut rng);
            }
            for _ in 0..config.iterations {
                trace.push(cfr.iterate(&mut rng)?);
            }
        }
        Algorithm::Ph => {
            let mut ph = ProgressiveHiding::new(
                game,
                coarse,
                fine,
                PhConfig {
                    learner: config.learner_spec(),
                    sampling: config.sampling(),
                    schedule: config.penalty_schedule(),
                    player: config.player,
                    horizon,
                    audit: false,
                },
            )?;
            if config.randomize_init {
                ph.randomize(&mut rng);
            }
            for _ in 0..config.iterations {
                trace.push(ph.iterate(&mut rng)?);
            }
        }
        Algorithm::Rir => {
            let problem = RelaxationProblem::new(game, coarse, fine, config.player, config.lambda)?;
            let mut policy = if config.randomize_init {
                BehavioralPolicy::random(fine, &mut rng)
            } else {
                BehavioralPolicy::uniform(fine)
            };
            for t in 1..=config.iterations {
                let gamma = problem.project(&policy)?;
                policy = problem.proximal_step(&gamma, &policy, config.prox_mode)?.policy;
                let projected = problem.project(&policy)?;
                trace.push(IterationRecord {
                    t,
                    expected_payoff_projected: expected_reward(game, coarse, &projected, config.player),
                    penalty_mass: problem.penalty(&policy, &projected),
                    sum_pos_local_regret: 0.0,
                    lambda_t: config.lambda,
                });
            }
        }
    }
    Ok(trace)
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRow {
    run: usize,
    seed: u64,
    t: usize,
    expected_payoff_projected: f64,
    penalty_mass: f64,
    sum_pos_local_regret: f64,
    lambda_t: f64,
}

/// Columns: run, seed, t, expected_payoff_projected, penalty_mass,
/// sum_pos_local_regret, lambda_t.
pub fn write_runs_csv(out: impl Write, records: &[RunRecord]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for record in records {
        for r in &record.trace {
            writer.serialize(RunRow {
                run: record.run,
                seed: record.seed,
                t: r.t,
                expected_payoff_projected: r.expected_payoff_projected,
                penalty_mass: r.penalty_mass,
                sum_pos_local_regret: r.sum_pos_local_regret,
                lambda_t: r.lambda_t,
            })?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn read_runs_csv(input: impl Read) -> anyhow::Result<Vec<RunRecord>> {
    let mut records: Vec<RunRecord> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: RunRow = row?;
        let entry = IterationRecord {
            t: row.t,
            expected_payoff_projected: row.expected_payoff_projected,
            penalty_mass: row.penalty_mass,
            sum_pos_local_regret: row.sum_pos_local_regret,
            lambda_t: row.lambda_t,
        };
        match records.last_mut() {
            Some(last) if last.run == row.run => {
                if last.seed != row.seed {
                    bail!("run {} has two seeds", row.run);
                }
                last.trace.push(entry);
            }
            _ => {
                if records.iter().any(|r| r.run == row.run) {
                    bail!("rows of run {} are not contiguous", row.run);
                }
                records.push(RunRecord {
                    run: row.run,
                    seed: row.seed,
                    trace: vec![entry],
                });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            game: "matching_pennies".into(),
            relaxed_map: "relaxed".into(),
            iterations: 30,
            repeats: 4,
            randomize_init: true,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn batches_are_reproducible_and_round_trip_through_csv() {
        let records = run_experiment(&config()).unwrap();
        assert_eq!(records, run_experiment(&config()).unwrap());
        let mut bytes = Vec::new();
        write_runs_csv(&mut bytes, &records).unwrap();
        assert!(String::from_utf8_lossy(&bytes).starts_with(
            "run,seed,t,expected_payoff_projected,penalty_mass,sum_pos_local_regret,lambda_t\n"
        ));
        assert_eq!(read_runs_csv(bytes.as_slice()).unwrap(), records);
    }

    #[test]
    fn every_algorithm_runs_and_stays_in_the_reward_range() {
        for algorithm in [Algorithm::Cfr, Algorithm::Ph, Algorithm::Rir] {
            let c = ExperimentConfig { algorithm, iterations: 5, ..config() };
            for record in run_experiment(&c).unwrap() {
                assert_eq!(record.trace.len(), 5);
                assert!(record.trace.iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r.expected_payoff_projected)));
            }
        }
    }

    #[test]
    fn seeds_depend_on_the_master_seed_only() {
        assert_eq!(run_seeds(3, 5), run_seeds(3, 5));
        assert_eq!(run_seeds(3, 5)[..2], run_seeds(3, 2)[..]);
        assert_ne!(run_seeds(3, 5), run_seeds(4, 5));
    }
}
