//! Experiment configuration, read from TOML and overridable from the command line.

use std::path::Path;

use anyhow::{bail, Context};
use phide_core::{LearnerKind, LearnerSpec, PenaltySchedule, ProxMode, Sampling};
use serde::{Deserialize, Serialize};

use crate::games::GameSelector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cfr,
    Ph,
    Rir,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Ramp,
    /// Experimental payoff controller.
    Controller,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: String,
    pub algorithm: Algorithm,
    /// Map the learners play on. CFR learns on it directly; progressive hiding and
    /// relaxation project back onto the game's original map.
    pub relaxed_map: String,
    pub schedule: ScheduleKind,
    pub lambda: f64,
    /// Payoff target of the controller schedule.
    pub target: f64,
    pub iterations: usize,
    pub learner: LearnerKind,
    /// Fixed entropic learning rate; by default `√(ln A / iterations)`.
    pub eta: Option<f64>,
    pub mode: Mode,
    pub exploration: f64,
    pub prox_mode: ProxMode,
    pub repeats: usize,
    /// Master seed; run seeds are drawn from it.
    pub seed: u64,
    /// Start every learner at a random point of its simplex.
    pub randomize_init: bool,
    /// Success threshold on the final projected payoff.
    pub threshold: f64,
    pub quantiles: Vec<f64>,
    pub player: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            game: "trade_comm:n=2,m=2".into(),
            algorithm: Algorithm::Ph,
            relaxed_map: "original".into(),
            schedule: ScheduleKind::Constant,
            lambda: 0.05,
            target: 0.95,
            iterations: 200,
            learner: LearnerKind::RegretMatching,
            eta: None,
            mode: Mode::Exact,
            exploration: phide_core::cfr::DEFAULT_EXPLORATION,
            prox_mode: ProxMode::BackwardInduction,
            repeats: 1,
            seed: 0,
            randomize_init: false,
            threshold: 0.95,
            quantiles: vec![0.1, 0.9],
            player: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text).context("parsing experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every key, naming the offending one on failure.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.selector().context("config key `game`")?;
        if self.iterations == 0 {
            bail!("config key `iterations`: must be positive");
        }
        if self.repeats == 0 {
            bail!("config key `repeats`: must be positive");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            bail!("config key `lambda`: must be finite and nonnegative, got {}", self.lambda);
        }
        if self.algorithm == Algorithm::Rir && !(self.lambda > 0.0) {
            bail!("config key `lambda`: relaxation needs a positive penalty weight");
        }
        if self.algorithm == Algorithm::Rir && self.schedule != ScheduleKind::Constant {
            bail!("config key `schedule`: relaxation uses a constant penalty weight");
        }
        if self.algorithm == Algorithm::Rir && self.mode != Mode::Exact {
            bail!("config key `mode`: relaxation is exact only");
        }
        if !self.target.is_finite() {
            bail!("config key `target`: must be finite");
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta > 0.0) {
                bail!("config key `eta`: must be positive, got {eta}");
            }
        }
        if !(0.0..=1.0).contains(&self.exploration) || (self.mode == Mode::Mc && self.exploration == 0.0) {
            bail!("config key `exploration`: must be in (0, 1], got {}", self.exploration);
        }
        if !self.threshold.is_finite() {
            bail!("config key `threshold`: must be finite");
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            bail!("config key `quantiles`: {q} is not in [0, 1]");
        }
        Ok(())
    }

    pub fn selector(&self) -> anyhow::Result<GameSelector> {
        self.game.parse()
    }

    pub fn learner_spec(&self) -> LearnerSpec {
        LearnerSpec {
            kind: self.learner,
            eta: self.eta,
        }
    }

    pub fn sampling(&self) -> Sampling {
        match self.mode {
            Mode::Exact => Sampling::Exact,
            Mode::Mc => Sampling::Outcome {
                exploration: self.exploration,
            },
        }
    }

    pub fn penalty_schedule(&self) -> PenaltySchedule {
        match self.schedule {
            ScheduleKind::Constant => PenaltySchedule::Constant(self.lambda),
            ScheduleKind::Ramp => PenaltySchedule::LinearRamp { initial: self.lambda },
            ScheduleKind::Controller => PenaltySchedule::PayoffController {
                initial: self.lambda,
                target: self.target,
            },
        }
    }
}
