//! Behavioral policies keyed by a compiled information partition.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::ProductGame;
use crate::info::{InfoPartition, InformationMap, Label};
use crate::scalar::Scalar;

/// Weight of the uniform policy mixed into projection and conditioning bases.
pub const SUPPORT_FLOOR: f64 = 1e-6;

/// `rows[stage][label][action]`: one local distribution per information label.
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralPolicy<S> {
    rows: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> BehavioralPolicy<S> {
    pub fn uniform(part: &InfoPartition) -> Self {
        Self::from_fn(part, |stage, _| {
            let a = part.actions(stage);
            vec![S::one() / S::of_usize(a); a]
        })
    }

    /// Builds a policy from a row generator. Rows are not validated.
    pub fn from_fn(part: &InfoPartition, mut row: impl FnMut(usize, usize) -> Vec<S>) -> Self {
        let rows = (0..part.num_stages())
            .map(|i| (0..part.num_labels(i)).map(|g| row(i, g)).collect())
            .collect();
        Self { rows }
    }

    /// Validated constructor.
    pub fn from_rows(part: &InfoPartition, rows: Vec<Vec<Vec<S>>>) -> Result<Self> {
        let policy = Self { rows };
        policy.check(part)?;
        Ok(policy)
    }

    /// Random policy with each row drawn uniformly from the simplex.
    pub fn random(part: &InfoPartition, rng: &mut impl Rng) -> Self {
        Self::from_fn(part, |stage, _| random_row(part.actions(stage), rng))
    }

    /// Random deterministic policy.
    pub fn random_deterministic(part: &InfoPartition, rng: &mut impl Rng) -> Self {
        Self::from_fn(part, |stage, _| {
            let a = part.actions(stage);
            vertex(a, rng.random_range(0..a))
        })
    }

    /// Checks shape against `part` and that every row is a probability vector.
    pub fn check(&self, part: &InfoPartition) -> Result<()> {
        if self.rows.len() != part.num_stages() {
            return Err(Error::PolicyShape(format!(
                "{} stages, expected {}",
                self.rows.len(),
                part.num_stages()
            )));
        }
        for (i, stage) in self.rows.iter().enumerate() {
            if stage.len() != part.num_labels(i) {
                return Err(Error::PolicyShape(format!(
                    "stage {i} has {} labels, expected {}",
                    stage.len(),
                    part.num_labels(i)
                )));
            }
            for row in stage {
                check_row(i, row, part.actions(i))?;
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<Vec<S>>] {
        &self.rows
    }

    pub fn stage_rows(&self, stage: usize) -> &[Vec<S>] {
        &self.rows[stage]
    }

    #[inline]
    pub fn row(&self, stage: usize, label: usize) -> &[S] {
        &self.rows[stage][label]
    }

    pub fn row_mut(&mut self, stage: usize, label: usize) -> &mut Vec<S> {
        &mut self.rows[stage][label]
    }

    /// Local distribution played at prefix `node` of depth `stage`.
    #[inline]
    pub fn at(&self, part: &InfoPartition, stage: usize, node: usize) -> &[S] {
        &self.rows[stage][part.label_of(stage, node)]
    }

    /// `(1 - ε)·μ + ε·uniform`, which has full support.
    pub fn floored(&self, eps: S) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|stage| {
                stage
                    .iter()
                    .map(|row| {
                        let u = eps / S::of_usize(row.len());
                        row.iter().map(|&p| (S::one() - eps) * p + u).collect()
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    /// The policy with stage `stage` replaced by `local` (one row per label).
    pub fn modify(&self, part: &InfoPartition, stage: usize, local: Vec<Vec<S>>) -> Result<Self> {
        if local.len() != part.num_labels(stage) {
            return Err(Error::PolicyShape(format!(
                "replacement for stage {stage} has {} rows, expected {}",
                local.len(),
                part.num_labels(stage)
            )));
        }
        for row in &local {
            check_row(stage, row, part.actions(stage))?;
        }
        let mut out = self.clone();
        out.rows[stage] = local;
        Ok(out)
    }

    /// The policy with stage `stage` playing `row` at every label.
    pub fn with_constant_stage(&self, part: &InfoPartition, stage: usize, row: &[S]) -> Result<Self> {
        self.modify(part, stage, vec![row.to_vec(); part.num_labels(stage)])
    }

    /// The policy with a single label's row replaced.
    pub fn with_row(&self, part: &InfoPartition, stage: usize, label: usize, row: Vec<S>) -> Result<Self> {
        check_row(stage, &row, part.actions(stage))?;
        let mut out = self.clone();
        out.rows[stage][label] = row;
        Ok(out)
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .all(|row| row.iter().all(|&p| p == S::zero() || p == S::one()))
    }

    /// Largest absolute entry difference against `other` (same shape assumed).
    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y).abs()))
            .fold(S::zero(), S::max)
    }

    /// Converts between scalar types.
    pub fn cast<T: Scalar>(&self) -> BehavioralPolicy<T> {
        BehavioralPolicy {
            rows: self
                .rows
                .iter()
                .map(|s| s.iter().map(|r| r.iter().map(|&p| T::of(p.as_f64())).collect()).collect())
                .collect(),
        }
    }
}

pub fn vertex<S: Scalar>(actions: usize, k: usize) -> Vec<S> {
    let mut v = vec![S::zero(); actions];
    v[k] = S::one();
    v
}

fn random_row<S: Scalar>(actions: usize, rng: &mut impl Rng) -> Vec<S> {
    let draws: Vec<f64> = (0..actions)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|&d| S::of(d / total)).collect()
}

fn check_row<S: Scalar>(stage: usize, row: &[S], actions: usize) -> Result<()> {
    if row.len() != actions {
        return Err(Error::IllegalSupport {
            stage,
            reason: format!("{} entries for {actions} legal actions", row.len()),
        });
    }
    let mut total = S::zero();
    for &p in row {
        if !p.is_finite() || p < S::zero() {
            return Err(Error::IllegalSupport {
                stage,
                reason: format!("entry {p} is not a probability"),
            });
        }
        total = total + p;
    }
    if (total - S::one()).abs() > S::mass_tolerance() {
        return Err(Error::IllegalSupport {
            stage,
            reason: format!("entries sum to {total}"),
        });
    }
    Ok(())
}

/// A deterministic profile addressed by raw labels, usable with maps that have not
/// been (or cannot be) compiled. Labels missing from the table play action 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeterministicProfile {
    pub choices: HashMap<(usize, Label), usize>,
}

impl DeterministicProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, stage: usize, label: Label, action: usize) {
        self.choices.insert((stage, label), action);
    }

    pub fn action(&self, stage: usize, label: Label) -> usize {
        self.choices.get(&(stage, label)).copied().unwrap_or(0)
    }

    /// Extracts the profile from a deterministic policy.
    pub fn from_policy<S: Scalar>(part: &InfoPartition, policy: &BehavioralPolicy<S>) -> Result<Self> {
        if !policy.is_deterministic() {
            return Err(Error::PolicyShape("profile is not deterministic".into()));
        }
        let mut out = Self::new();
        for i in 0..part.num_stages() {
            for (g, &label) in part.labels[i].iter().enumerate() {
                let a = policy.row(i, g).iter().position(|&p| p == S::one()).unwrap_or(0);
                out.set(i, label, a);
            }
        }
        Ok(out)
    }

    /// Every stage plays the same action regardless of its label.
    pub fn constant<S: Scalar>(game: &ProductGame<S>, map: &InformationMap, actions: &[usize]) -> Self {
        let mut out = Self::new();
        for h in game.histories() {
            for (i, &a) in actions.iter().enumerate() {
                out.set(i, map.label(game, i, &h), a);
            }
        }
        out
    }
}
