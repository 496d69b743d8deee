use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("demand-to-supply ratio must be positive, got {0}")]
    NonPositiveDemand(f64),

    #[error("buy-order validity probability vanished; execution probability undefined")]
    VanishingValidity,

    #[error("diffusion term non-positive at delta = {delta}: M2 = {m2}")]
    NonPositiveDiffusion { delta: f64, m2: f64 },

    #[error("no sellers (or buyers) at market index {market}; order parameter update is a boundary condition")]
    EmptyMarketSide { market: usize },

    #[error("distribution has zero second moment; Binder cumulant undefined")]
    DegenerateDistribution,

    #[error("group has fewer than two agents or zero variance; statistic undefined")]
    DegenerateGroup,

    #[error("solver did not converge: {0}")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
