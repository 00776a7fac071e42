use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is not strictly interior: {0}")]
    DomainViolation(String),

    #[error("factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("A has a nontrivial kernel (numerical rank {rank} < {n})")]
    RankDeficient { rank: usize, n: usize },

    #[error("atom coordinates do not partition 1..{m}: {detail}")]
    AtomCoverage { m: usize, detail: String },

    #[error("invalid atom: {0}")]
    BadAtom(String),

    #[error("invalid solver constants: {0}")]
    BadConstants(String),

    #[error("corrector stalled at proximity {proximity:.3e}")]
    CorrectorStall { proximity: f64 },

    #[error("predictor could not increase mu beyond {mu:.6e}")]
    PredictorStall { mu: f64 },

    #[error("projection left the interior of D*: {0}")]
    ProjectionOutsideCone(String),

    #[error("projection left the interior of D: {0}")]
    ProjectionOutsideDomain(String),

    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),
}
