use thiserror::Error;

use crate::padic::Rational;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero series: every coefficient has infinite valuation")]
    ZeroSeries,

    #[error("truncation too short: need {needed} coefficients, have {available}")]
    TruncationTooShort { needed: usize, available: usize },

    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),

    #[error("{0} is not a unit")]
    NotAUnit(String),

    #[error("denominator divisible by p = {0}")]
    NonIntegral(u64),

    #[error("wild stabilization: {0}")]
    WildStabilization(String),

    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),

    #[error("undecidable at precision {precision}: {what}")]
    Undecidable { what: String, precision: u32 },

    #[error("slope {0} is outside the classifier range; use extrapolate")]
    UseExtrapolate(Rational),

    #[error("slope {0} is outside the covered range")]
    SlopeNotCovered(Rational),

    #[error("shape is not covered: {0}")]
    NotCovered(String),

    #[error("recipe not implemented for this shape")]
    RecipeNotImplemented,

    #[error("increase dimension/precision: {0}")]
    Unstable(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("components differ: weight {0} vs weight {1}")]
    ComponentMismatch(i64, i64),

    #[error("parse error: {0}")]
    Parse(String),
}
