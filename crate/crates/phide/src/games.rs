//! Game selectors such as `trade_comm:n=2,m=2`, `matching_pennies` or `random:seed=7`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use phide_core::zoo::{random_game, MatchingPennies, RandomCaps, TradeComm};
use phide_core::{GameDocument, InformationMap, ProductGame};

#[derive(Clone, Debug, PartialEq)]
pub enum GameSelector {
    TradeComm { n: usize, m: usize },
    MatchingPennies(MatchingPennies),
    Random { seed: u64, caps: RandomCaps },
    /// A game document on disk.
    File(PathBuf),
}

/// A built game with its named information maps.
#[derive(Clone, Debug)]
pub struct LoadedGame {
    pub game: ProductGame,
    pub maps: BTreeMap<String, InformationMap>,
    /// Name of the map the players actually have.
    pub original: String,
}

impl LoadedGame {
    pub fn map(&self, name: &str) -> anyhow::Result<&InformationMap> {
        self.maps.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.maps.keys().map(String::as_str).collect();
            anyhow!("unknown map {name:?}; this game has {}", known.join(", "))
        })
    }
}

impl GameSelector {
    pub fn load(&self) -> anyhow::Result<LoadedGame> {
        Ok(match self {
            Self::TradeComm { n, m } => {
                let tc = TradeComm::new(*n, *m).build::<f64>()?;
                LoadedGame {
                    game: tc.game,
                    maps: BTreeMap::from([
                        ("original".into(), tc.original),
                        ("cheat".into(), tc.cheat),
                        ("perfect_recall".into(), tc.perfect_recall),
                    ]),
                    original: "original".into(),
                }
            }
            Self::MatchingPennies(spec) => {
                let mp = spec.build::<f64>()?;
                LoadedGame {
                    game: mp.game,
                    maps: BTreeMap::from([("original".into(), mp.original), ("relaxed".into(), mp.relaxed)]),
                    original: "original".into(),
                }
            }
            Self::Random { seed, caps } => {
                let g = random_game::<f64>(*seed, *caps)?;
                LoadedGame {
                    game: g.game,
                    maps: BTreeMap::from([("original".into(), g.coarse), ("fine".into(), g.fine)]),
                    original: "original".into(),
                }
            }
            Self::File(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let (game, maps) = GameDocument::from_toml(&text)?.to_game::<f64>()?;
                if !maps.contains_key("original") {
                    bail!("{} defines no map named \"original\"", path.display());
                }
                LoadedGame {
                    game,
                    maps,
                    original: "original".into(),
                }
            }
        })
    }
}

impl FromStr for GameSelector {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        if kind.trim() == "file" {
            return Ok(Self::File(PathBuf::from(rest.trim())));
        }
        let mut params = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value in game selector, got {pair:?}"))?;
            params.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut take = |key: &str| params.remove(key);
        let selector = match kind.trim() {
            "trade_comm" => Self::TradeComm {
                n: parse_or(take("n"), 2, "n")?,
                m: parse_or(take("m"), 2, "m")?,
            },
            "matching_pennies" => {
                let d = MatchingPennies::default();
                Self::MatchingPennies(MatchingPennies {
                    payoff_match: parse_or(take("match"), d.payoff_match, "match")?,
                    payoff_mismatch: parse_or(take("mismatch"), d.payoff_mismatch, "mismatch")?,
                    payoff_pass: parse_or(take("pass"), d.payoff_pass, "pass")?,
                })
            }
            "random" => {
                let d = RandomCaps::default();
                Self::Random {
                    seed: parse_or(take("seed"), 0, "seed")?,
                    caps: RandomCaps {
                        max_nature: parse_or(take("nature"), d.max_nature, "nature")?,
                        max_stages: parse_or(take("stages"), d.max_stages, "stages")?,
                        max_actions: parse_or(take("actions"), d.max_actions, "actions")?,
                        max_players: parse_or(take("players"), d.max_players, "players")?,
                        perfect_recall: parse_or(take("perfect_recall"), d.perfect_recall, "perfect_recall")?,
                    },
                }
            }
            other => bail!("unknown game {other:?} (expected trade_comm, matching_pennies, random or file)"),
        };
        if let Some(key) = params.keys().next() {
            bail!("unknown parameter {key:?} for game {}", kind.trim());
        }
        Ok(selector)
    }
}

fn parse_or<T: FromStr>(value: Option<String>, default: T, key: &str) -> anyhow::Result<T> {
    match value {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| anyhow!("bad value {v:?} for game parameter {key}")),
    }
}

impl fmt::Display for GameSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TradeComm { n, m } => write!(f, "trade_comm:n={n},m={m}"),
            Self::MatchingPennies(s) => write!(
                f,
                "matching_pennies:match={},mismatch={},pass={}",
                s.payoff_match, s.payoff_mismatch, s.payoff_pass
            ),
            Self::Random { seed, caps } => write!(
                f,
                "random:seed={seed},nature={},stages={},actions={},players={},perfect_recall={}",
                caps.max_nature, caps.max_stages, caps.max_actions, caps.max_players, caps.perfect_recall
            ),
            Self::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_parse_and_print_back() {
        for text in ["trade_comm:n=3,m=2", "matching_pennies", "random:seed=7,perfect_recall=true", "file:/tmp/g.toml"] {
            let sel: GameSelector = text.parse().unwrap();
            let again: GameSelector = sel.to_string().parse().unwrap();
            assert_eq!(sel, again);
        }
        assert_eq!("trade_comm".parse::<GameSelector>().unwrap(), GameSelector::TradeComm { n: 2, m: 2 });
    }

    #[test]
    fn bad_selectors_are_rejected() {
        assert!("chess".parse::<GameSelector>().is_err());
        assert!("trade_comm:n=x".parse::<GameSelector>().is_err());
        assert!("trade_comm:k=2".parse::<GameSelector>().is_err());
        assert!("matching_pennies:pass=2".parse::<GameSelector>().unwrap().load().is_err());
    }

    #[test]
    fn loads_expected_maps() {
        let g = "trade_comm:n=2,m=2".parse::<GameSelector>().unwrap().load().unwrap();
        assert_eq!(g.maps.len(), 3);
        assert!(g.map("perfect_recall").is_ok());
        assert!(g.map("relaxed").is_err());
        assert_eq!(g.game.num_histories(), 256);
    }
}
