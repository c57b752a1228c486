//! Information maps and their compiled partitions.
//!
//! An [`InformationMap`] says, for every stage, which label the acting player sees.
//! Stages either reveal a list of components of the history (Nature coordinates and
//! earlier actions) or carry an explicit label per prefix node. Compiling a map against
//! a game yields an [`InfoPartition`]: dense label ids per prefix node, which every
//! algorithm in the crate indexes policies and learners by.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::game::{History, PlayerId, ProductGame};
use crate::scalar::Scalar;

/// Opaque information label. Only equality is meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A component of the history a stage may observe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    /// Coordinate `k` of Nature's state.
    Nature(usize),
    /// The action played at stage `j`.
    Action(usize),
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Nature(k) => write!(f, "nature[{k}]"),
            Component::Action(j) => write!(f, "action[{j}]"),
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("cannot parse component {s:?}"));
        let s = s.trim();
        let open = s.find('[').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(']').ok_or_else(bad)?;
        let index: usize = inner.trim().parse().map_err(|_| bad())?;
        match s[..open].trim() {
            "nature" => Ok(Component::Nature(index)),
            "action" => Ok(Component::Action(index)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageMap {
    /// The label is determined by the listed components, in order.
    Reveal(Vec<Component>),
    /// One label per prefix node at the stage's depth.
    Table(Vec<Label>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InformationMap {
    pub stages: Vec<StageMap>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut hash: u64, value: u64) -> u64 {
    for byte in value.to_le_bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

impl InformationMap {
    pub fn new(stages: Vec<StageMap>) -> Self {
        Self { stages }
    }

    /// Shorthand for a map where every stage reveals a list of components.
    pub fn reveal(stages: Vec<Vec<Component>>) -> Self {
        Self::new(stages.into_iter().map(StageMap::Reveal).collect())
    }

    /// Label of `history` at `stage`, read from the full history. Future-reading maps
    /// are accepted here so that well-posedness can be examined on them.
    pub fn label<S: Scalar>(&self, game: &ProductGame<S>, stage: usize, history: &History) -> Label {
        match &self.stages[stage] {
            StageMap::Reveal(components) => {
                let coords = &game.nature()[history.nature].coords;
                let mut hash = FNV_OFFSET;
                for c in components {
                    hash = match *c {
                        Component::Nature(k) => fnv(fnv(hash, 2 * k as u64), coords[k] as u64),
                        Component::Action(j) => {
                            fnv(fnv(hash, 2 * j as u64 + 1), history.actions[j] as u64)
                        }
                    };
                }
                Label(hash)
            }
            StageMap::Table(table) => {
                let leaf = game
                    .history_index(history)
                    .expect("history belongs to the game");
                table[game.ancestor(game.num_stages(), leaf, stage)]
            }
        }
    }

    /// Checks shape, component ranges and non-anticipativity.
    pub fn validate<S: Scalar>(&self, game: &ProductGame<S>) -> Result<()> {
        self.validate_shape(game)?;
        for (stage, map) in self.stages.iter().enumerate() {
            if let StageMap::Reveal(components) = map {
                for c in components {
                    if let Component::Action(j) = *c {
                        if j >= stage {
                            return Err(Error::AnticipativeMap { stage, component: j });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Shape checks only; anticipative reveals are allowed.
    pub fn validate_shape<S: Scalar>(&self, game: &ProductGame<S>) -> Result<()> {
        if self.stages.len() != game.num_stages() {
            return Err(Error::InvalidMap {
                stage: self.stages.len().min(game.num_stages()),
                reason: format!(
                    "map has {} stages, game has {}",
                    self.stages.len(),
                    game.num_stages()
                ),
            });
        }
        let dims = game.nature().iter().map(|s| s.coords.len()).min().unwrap_or(0);
        for (stage, map) in self.stages.iter().enumerate() {
            match map {
                StageMap::Reveal(components) => {
                    for c in components {
                        let ok = match *c {
                            Component::Nature(k) => k < dims,
                            Component::Action(j) => j < game.num_stages(),
                        };
                        if !ok {
                            return Err(Error::InvalidMap {
                                stage,
                                reason: format!("component {c} is out of range"),
                            });
                        }
                    }
                }
                StageMap::Table(table) => {
                    if table.len() != game.nodes_at(stage) {
                        return Err(Error::InvalidMap {
                            stage,
                            reason: format!(
                                "table has {} labels, expected one per prefix ({})",
                                table.len(),
                                game.nodes_at(stage)
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Equivalent map with every stage written out as an explicit table.
    pub fn tabulate<S: Scalar>(&self, game: &ProductGame<S>) -> Result<Self> {
        let part = InfoPartition::compile(game, self)?;
        let stages = (0..game.num_stages())
            .map(|i| StageMap::Table(part.node_label[i].iter().map(|&l| part.labels[i][l]).collect()))
            .collect();
        Ok(Self::new(stages))
    }
}

/// A map compiled against one game: dense label ids per prefix node.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoPartition {
    /// `node_label[i][node]` is the dense label of prefix `node` at depth `i`.
    pub node_label: Vec<Vec<usize>>,
    /// `labels[i][dense]` is the opaque label behind a dense id.
    pub labels: Vec<Vec<Label>>,
    /// `members[i][dense]` lists the prefix nodes carrying that label, increasing.
    pub members: Vec<Vec<Vec<usize>>>,
    lookup: Vec<HashMap<Label, usize>>,
    actions: Vec<usize>,
    players: Vec<PlayerId>,
}

impl InfoPartition {
    /// Compiles `map` for `game`. Dense ids follow first appearance in prefix order.
    pub fn compile<S: Scalar>(game: &ProductGame<S>, map: &InformationMap) -> Result<Self> {
        map.validate(game)?;
        let stages = game.num_stages();
        let mut node_label = Vec::with_capacity(stages);
        let mut labels = Vec::with_capacity(stages);
        let mut members = Vec::with_capacity(stages);
        let mut lookup = Vec::with_capacity(stages);
        for i in 0..stages {
            let mut ids = HashMap::new();
            let mut dense = Vec::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut per_node = Vec::with_capacity(game.nodes_at(i));
            for node in 0..game.nodes_at(i) {
                let label = prefix_label(game, map, i, node);
                let id = *ids.entry(label).or_insert_with(|| {
                    dense.push(label);
                    groups.push(Vec::new());
                    dense.len() - 1
                });
                groups[id].push(node);
                per_node.push(id);
            }
            node_label.push(per_node);
            labels.push(dense);
            members.push(groups);
            lookup.push(ids);
        }
        Ok(Self {
            node_label,
            labels,
            members,
            lookup,
            actions: game.stages().iter().map(|s| s.actions).collect(),
            players: game.stages().iter().map(|s| s.player).collect(),
        })
    }

    pub fn num_stages(&self) -> usize {
        self.node_label.len()
    }

    pub fn num_labels(&self, stage: usize) -> usize {
        self.labels[stage].len()
    }

    pub fn actions(&self, stage: usize) -> usize {
        self.actions[stage]
    }

    pub fn player_of(&self, stage: usize) -> PlayerId {
        self.players[stage]
    }

    /// Dense label of prefix `node` at `stage`.
    #[inline]
    pub fn label_of(&self, stage: usize, node: usize) -> usize {
        self.node_label[stage][node]
    }

    pub fn dense(&self, stage: usize, label: Label) -> Option<usize> {
        self.lookup[stage].get(&label).copied()
    }

    /// Total number of (stage, label) slots over the stages owned by `player`.
    pub fn slots_of(&self, player: PlayerId) -> usize {
        (0..self.num_stages())
            .filter(|&i| self.players[i] == player)
            .map(|i| self.num_labels(i))
            .sum()
    }
}

/// Label of a prefix node, reading only the components the prefix contains.
fn prefix_label<S: Scalar>(
    game: &ProductGame<S>,
    map: &InformationMap,
    stage: usize,
    node: usize,
) -> Label {
    match &map.stages[stage] {
        StageMap::Table(table) => table[node],
        StageMap::Reveal(_) => {
            let (nature, mut actions) = game.prefix(stage, node);
            actions.resize(game.num_stages(), 0);
            map.label(game, stage, &History::new(nature, actions))
        }
    }
}

/// First stage at which `fine` fails to determine `coarse`, if any.
pub fn refinement_failure(fine: &InfoPartition, coarse: &InfoPartition) -> Option<usize> {
    (0..fine.num_stages()).find(|&i| coarse_of_fine(fine, coarse, i).is_none())
}

/// True iff every pair of histories separated by `coarse` is separated by `fine`.
pub fn is_finer(fine: &InfoPartition, coarse: &InfoPartition) -> bool {
    refinement_failure(fine, coarse).is_none()
}

/// For one stage, the coarse label each fine label falls in, if that is a function.
pub fn coarse_of_fine(fine: &InfoPartition, coarse: &InfoPartition, stage: usize) -> Option<Vec<usize>> {
    let mut map = vec![usize::MAX; fine.num_labels(stage)];
    for (node, &f) in fine.node_label[stage].iter().enumerate() {
        let c = coarse.node_label[stage][node];
        if map[f] == usize::MAX {
            map[f] = c;
        } else if map[f] != c {
            return None;
        }
    }
    Some(map)
}

/// First pair of stages `(earlier, later)` of `player` violating perfect recall.
pub fn perfect_recall_failure<S: Scalar>(
    game: &ProductGame<S>,
    part: &InfoPartition,
    player: PlayerId,
) -> Option<(usize, usize)> {
    let own = game.stages_of(player);
    for (pos, &j) in own.iter().enumerate() {
        for &i in &own[..pos] {
            // Every node carrying a stage-j label must agree on the stage-i label
            // and on the action taken at stage i.
            let mut seen: Vec<Option<(usize, usize)>> = vec![None; part.num_labels(j)];
            for (node, &g) in part.node_label[j].iter().enumerate() {
                let at_i = game.ancestor(j, node, i + 1);
                let (before, action) = game.parent(i + 1, at_i);
                let key = (part.label_of(i, before), action);
                match seen[g] {
                    None => seen[g] = Some(key),
                    Some(k) if k == key => {}
                    Some(_) => return Some((i, j)),
                }
            }
        }
    }
    None
}

pub fn has_perfect_recall<S: Scalar>(game: &ProductGame<S>, part: &InfoPartition, player: PlayerId) -> bool {
    perfect_recall_failure(game, part, player).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{NatureState, Stage};

    fn game() -> ProductGame<f64> {
        ProductGame::new(
            vec![
                NatureState::new(vec![0, 0], 0.25),
                NatureState::new(vec![0, 1], 0.25),
                NatureState::new(vec![1, 0], 0.25),
                NatureState::new(vec![1, 1], 0.25),
            ],
            vec![Stage::new(0, 2), Stage::new(0, 2), Stage::new(0, 2)],
            1,
            |_| vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn component_round_trips_through_text() {
        for c in [Component::Nature(3), Component::Action(0)] {
            assert_eq!(c.to_string().parse::<Component>().unwrap(), c);
        }
        assert!("actions[1]".parse::<Component>().is_err());
    }

    #[test]
    fn reveal_labels_ignore_later_actions() {
        let g = game();
        let map = InformationMap::reveal(vec![
            vec![Component::Nature(0)],
            vec![Component::Nature(1), Component::Action(0)],
            vec![Component::Action(1)],
        ]);
        let part = InfoPartition::compile(&g, &map).unwrap();
        assert_eq!(part.num_labels(0), 2);
        assert_eq!(part.num_labels(1), 4);
        assert_eq!(part.num_labels(2), 2);
        for h in g.histories() {
            for i in 0..3 {
                let mut other = h.clone();
                for j in i..3 {
                    other.actions[j] = 1 - other.actions[j];
                }
                assert_eq!(map.label(&g, i, &h), map.label(&g, i, &other));
            }
        }
    }

    #[test]
    fn anticipative_reveal_is_rejected() {
        let g = game();
        let map = InformationMap::reveal(vec![vec![], vec![Component::Action(1)], vec![]]);
        assert_eq!(
            InfoPartition::compile(&g, &map).unwrap_err(),
            Error::AnticipativeMap { stage: 1, component: 1 }
        );
    }

    #[test]
    fn tabulated_map_compiles_to_the_same_partition() {
        let g = game();
        let map = InformationMap::reveal(vec![
            vec![Component::Nature(1)],
            vec![Component::Action(0)],
            vec![Component::Nature(0), Component::Action(1)],
        ]);
        let table = map.tabulate(&g).unwrap();
        let a = InfoPartition::compile(&g, &map).unwrap();
        let b = InfoPartition::compile(&g, &table).unwrap();
        assert_eq!(a.node_label, b.node_label);
    }

    #[test]
    fn refinement_and_recall() {
        let g = game();
        let coarse = InformationMap::reveal(vec![vec![], vec![Component::Nature(0)], vec![]]);
        let fine = InformationMap::reveal(vec![
            vec![Component::Nature(0)],
            vec![Component::Nature(0), Component::Action(0)],
            vec![Component::Nature(0), Component::Action(0), Component::Action(1)],
        ]);
        let c = InfoPartition::compile(&g, &coarse).unwrap();
        let f = InfoPartition::compile(&g, &fine).unwrap();
        assert!(is_finer(&f, &c));
        assert!(is_finer(&c, &c));
        assert_eq!(refinement_failure(&c, &f), Some(0));
        assert!(has_perfect_recall(&g, &f, 0));
        // Forgetting the first action at the last stage.
        assert_eq!(perfect_recall_failure(&g, &c, 0), Some((0, 1)));
    }
}
