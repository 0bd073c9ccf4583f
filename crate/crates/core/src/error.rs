use thiserror::Error;

use crate::expr::EvalError;
use crate::instance::InstanceError;
use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid ratio parameters: {0}")]
    InvalidRatio(String),
    #[error("active constraint gradients have rank {rank} < {required}; multipliers are not unique")]
    RankDeficient { rank: usize, required: usize },
    #[error("stationarity residual {residual:e} exceeds tolerance; not a normalized KKT point for these ratios")]
    LargeResidual { residual: f64 },
    #[error("multipliers of player {player} are not unique; per-player ratio test is undecidable")]
    NonUniquePlayerMultipliers { player: usize },
    #[error("{combinations} active-set combinations exceed the cap of {cap}")]
    CombinatorialCap { combinations: u128, cap: u128 },
    #[error("instance does not declare both convexity flags (c1, c2)")]
    NotConvexFlagged,
    #[error("GNEP-LICQ fails (rank {rank} < {required}); tangent space dimension formula does not apply")]
    LicqFailed { rank: usize, required: usize },
    #[error("no row contains a unique single-constraint equilibrium")]
    NoInteriorFamily,
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Error::Instance(InstanceError::Eval(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
