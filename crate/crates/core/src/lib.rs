//! Product-form games, information relaxation and progressive hiding.
//!
//! The core is generic over the scalar type (`f32` or `f64`); the aliases at the crate
//! root fix it to `f64`, which is what the experiments and the CLI use.

pub mod cfr;
pub mod error;
pub mod format;
pub mod game;
pub mod hiding;
pub mod info;
pub mod learners;
pub mod measure;
pub mod oracle;
pub mod policy;
pub mod projection;
pub mod relaxation;
pub mod scalar;
pub mod simplex;
pub mod zoo;

pub use cfr::{Cfr, CfrConfig, IterationRecord, Sampling};
pub use error::{Error, Result};
pub use format::GameDocument;
pub use game::{History, NatureState, PlayerId, Stage};
pub use hiding::{PenaltySchedule, PhConfig, ProgressiveHiding, RegretReport};
pub use info::{Component, InfoPartition, InformationMap, Label, StageMap};
pub use learners::{LearnerKind, LearnerSpec};
pub use policy::{DeterministicProfile, SUPPORT_FLOOR};
pub use projection::Projector;
pub use relaxation::{rir_run, ProxMode, RelaxationProblem, RirOutcome};
pub use scalar::Scalar;

pub type ProductGame = game::ProductGame<f64>;
pub type BehavioralPolicy = policy::BehavioralPolicy<f64>;
