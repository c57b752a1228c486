use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("information map is invalid at stage {stage}: {reason}")]
    InvalidMap { stage: usize, reason: String },

    #[error("stage {stage} reads action {component}, which is not strictly earlier")]
    AnticipativeMap { stage: usize, component: usize },

    #[error("nature state {nature} has {fixed_points} fixed-point histories, expected exactly one")]
    WellPosednessViolation { nature: usize, fixed_points: usize },

    #[error("label {label} at stage {stage} has zero conditioning mass")]
    ZeroReachLabel { stage: usize, label: usize },

    #[error("illegal local policy at stage {stage}: {reason}")]
    IllegalSupport { stage: usize, reason: String },

    #[error("policy does not match the information partition: {0}")]
    PolicyShape(String),

    #[error("enumeration exceeds the cap of {cap} candidate assignments")]
    EnumerationTooLarge { cap: u64 },

    #[error("perfect recall is required for player {player} (fails between stages {earlier} and {later})")]
    PerfectRecallRequired {
        player: usize,
        earlier: usize,
        later: usize,
    },

    #[error("relaxed map is not finer than the original map at stage {0}")]
    NotFiner(usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("game file: {0}")]
    Format(String),
}
