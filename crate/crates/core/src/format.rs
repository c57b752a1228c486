//! Declarative text format for games and their information maps, in TOML.
//!
//! ```toml
//! players = 1
//!
//! [[nature]]
//! coords = [0]
//! weight = 0.5
//!
//! [[stages]]
//! player = 0
//! actions = 2
//!
//! [[rewards]]
//! nature = 0
//! actions = [1]
//! values = [1.0]
//!
//! [maps]
//! original = [{ reveal = ["nature[0]"] }]
//! ```
//!
//! Indices are 0-based. Every history appears once in `rewards`. A stage map either
//! lists revealed components or gives one hexadecimal label per prefix node. Reading
//! back a written document gives an equal game and equal maps; values go through
//! `f64`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{History, NatureState, ProductGame, Stage};
use crate::info::{Component, InformationMap, Label, StageMap};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub players: usize,
    pub nature: Vec<NatureRecord>,
    pub stages: Vec<StageRecord>,
    pub rewards: Vec<RewardRecord>,
    #[serde(default)]
    pub maps: BTreeMap<String, Vec<StageMapRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NatureRecord {
    pub coords: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub player: usize,
    pub actions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRecord {
    pub nature: usize,
    pub actions: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StageMapRecord {
    Reveal(Vec<String>),
    Table(Vec<String>),
}

impl GameDocument {
    pub fn from_game<S: Scalar>(game: &ProductGame<S>, maps: &BTreeMap<String, InformationMap>) -> Self {
        let players = game.num_players();
        let rewards = game
            .histories()
            .enumerate()
            .map(|(index, h)| RewardRecord {
                nature: h.nature,
                actions: h.actions,
                values: (0..players).map(|p| game.reward(index, p).as_f64()).collect(),
            })
            .collect();
        Self {
            players,
            nature: game
                .nature()
                .iter()
                .map(|s| NatureRecord {
                    coords: s.coords.clone(),
                    weight: s.weight.as_f64(),
                })
                .collect(),
            stages: game
                .stages()
                .iter()
                .map(|s| StageRecord {
                    player: s.player,
                    actions: s.actions,
                })
                .collect(),
            rewards,
            maps: maps
                .iter()
                .map(|(name, map)| (name.clone(), map.stages.iter().map(stage_record).collect()))
                .collect(),
        }
    }

    /// The game and its named maps; maps are checked against the game's shape.
    pub fn to_game<S: Scalar>(&self) -> Result<(ProductGame<S>, BTreeMap<String, InformationMap>)> {
        let nature = self
            .nature
            .iter()
            .map(|n| NatureState::new(n.coords.clone(), S::of(n.weight)))
            .collect();
        let stages: Vec<Stage> = self.stages.iter().map(|s| Stage::new(s.player, s.actions)).collect();
        let shape = ProductGame::from_reward_table(
            nature,
            stages,
            self.players,
            vec![S::zero(); self.expected_histories()? * self.players],
        )?;
        let mut table = vec![S::zero(); shape.num_histories() * self.players];
        let mut seen = vec![false; shape.num_histories()];
        for record in &self.rewards {
            let history = History::new(record.nature, record.actions.clone());
            let index = shape
                .history_index(&history)
                .ok_or_else(|| Error::Format(format!("reward row for {history:?} is not a history")))?;
            if std::mem::replace(&mut seen[index], true) {
                return Err(Error::Format(format!("history {history:?} has two reward rows")));
            }
            if record.values.len() != self.players {
                return Err(Error::Format(format!(
                    "history {history:?} has {} rewards, expected {}",
                    record.values.len(),
                    self.players
                )));
            }
            for (p, &v) in record.values.iter().enumerate() {
                table[index * self.players + p] = S::of(v);
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Format(format!("history {:?} has no reward row", shape.history(missing))));
        }
        let game = ProductGame::from_reward_table(shape.nature().to_vec(), shape.stages().to_vec(), self.players, table)?;
        let mut maps = BTreeMap::new();
        for (name, records) in &self.maps {
            let stages = records.iter().map(parse_stage).collect::<Result<Vec<_>>>()?;
            let map = InformationMap::new(stages);
            map.validate_shape(&game)
                .map_err(|e| Error::Format(format!("map {name:?}: {e}")))?;
            maps.insert(name.clone(), map);
        }
        Ok((game, maps))
    }

    fn expected_histories(&self) -> Result<usize> {
        let mut total = self.nature.len();
        for s in &self.stages {
            total = total
                .checked_mul(s.actions)
                .ok_or_else(|| Error::Format("game too large".into()))?;
        }
        Ok(total)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

fn stage_record(map: &StageMap) -> StageMapRecord {
    match map {
        StageMap::Reveal(components) => StageMapRecord::Reveal(components.iter().map(|c| c.to_string()).collect()),
        StageMap::Table(labels) => StageMapRecord::Table(labels.iter().map(|l| l.to_string()).collect()),
    }
}

fn parse_stage(record: &StageMapRecord) -> Result<StageMap> {
    match record {
        StageMapRecord::Reveal(items) => Ok(StageMap::Reveal(
            items.iter().map(|s| s.parse::<Component>()).collect::<Result<_>>()?,
        )),
        StageMapRecord::Table(items) => Ok(StageMap::Table(
            items
                .iter()
                .map(|s| {
                    u64::from_str_radix(s.trim(), 16)
                        .map(Label)
                        .map_err(|_| Error::Format(format!("bad label {s:?}")))
                })
                .collect::<Result<_>>()?,
        )),
    }
}
