//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: need d >= 1 and n >= 2, got d={d}, n={n}")]
    InvalidLattice { d: usize, n: usize },

    #[error("site {site} is outside the lattice (coordinates must lie in [1, {max}])")]
    SiteOutsideLattice { site: String, max: usize },

    #[error("site {site} is not a boundary site")]
    NotBoundarySite { site: String },

    #[error(
        "boundary layer too wide for n={n}: n^(theta-1)/c = {width} must be < 1/2 \
         (and n >= 3) when theta < 1"
    )]
    BoundaryLayerTooWide { n: usize, width: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space too large: {sites} sites exceeds the cap of {cap}")]
    StateSpaceTooLarge { sites: usize, cap: usize },

    #[error("uniformization truncation budget exceeded (needed more than {budget} terms)")]
    TruncationBudgetExceeded { budget: usize },

    #[error("generator is numerically singular; no unique stationary distribution found")]
    SingularGenerator,

    #[error("total event rate is zero: the configuration is absorbing")]
    ZeroTotalRate,

    #[error("field value {value} outside the open interval (0, 1)")]
    FieldOutOfRange { value: f64 },

    #[error("relative entropy is infinite: the reference vanishes on a state of positive mass")]
    InfiniteRelativeEntropy,

    #[error("numerical instability: non-finite value produced during {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
