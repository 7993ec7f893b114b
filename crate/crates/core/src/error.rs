use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0} is not a discriminant")]
    NotDiscriminant(u64),
    #[error("parameters exceed the 128-bit envelope: {0}")]
    Overflow(String),
    #[error("iteration cap reached in {0}")]
    NoConvergence(&'static str),
    #[error("L(1, chi_{d}) would need {needed} terms, cap is {cap}")]
    TermCap { d: u64, needed: u64, cap: u64 },
    #[error("L(1, chi_{d}) self-check failed: relative gap {gap:e} > {tol:e}")]
    SelfCheck { d: u64, gap: f64, tol: f64 },
    #[error("ambiguous rounding for d = {d}: formula value {value}")]
    AmbiguousRounding { d: u64, value: f64 },
    #[error("class number disagreement at d = {d}: cycles {cycles}, formula {formula}")]
    ClassNumberMismatch { d: u64, cycles: u64, formula: u64 },
    #[error("Euler factor vanishes at p = {0}")]
    VanishingFactor(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
