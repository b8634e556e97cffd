use crate::central::Strip;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty set has no Hausdorff distance")]
    EmptySet,

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("epsilon schedule must be non-empty, strictly decreasing and positive")]
    BadSchedule,

    #[error("propagation failed to stabilize")]
    PropagationDiverged,

    #[error("dichotomy requires chain-transitive base")]
    ChainTransitiveBaseRequired,

    #[error("resolution insufficient")]
    ResolutionInsufficient {
        unstable: Box<Strip>,
        stable: Box<Strip>,
    },

    #[error("splitting degenerate")]
    DegenerateSplitting,

    #[error("central direction not equivariant at sample resolution")]
    NotEquivariant,

    #[error("points not comparable at r0")]
    NotComparable,

    #[error("period >= 2 required")]
    PeriodTooShort,

    #[error("missing inverse map for stable side")]
    MissingInverse,

    #[error("unknown system {name:?}; catalog: {catalog}")]
    UnknownSystem { name: String, catalog: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
