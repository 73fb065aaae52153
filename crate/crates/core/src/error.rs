use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid digit {digit} at position {position}: partial quotients must be >= 1")]
    InvalidDigit { position: usize, digit: i64 },

    #[error("enumeration needs {required} nodes but the budget is {budget}")]
    BudgetExceeded { required: f64, budget: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infinite-alphabet sum diverges for s = {s} (need s > 1/2)")]
    Divergence { s: f64 },

    #[error("power iteration did not converge after {iterations} steps (residual {residual:e})")]
    NumericFailure { iterations: usize, residual: f64 },

    #[error("no sign change on [{lo}, {hi}]: pressure {p_lo} at lo, {p_hi} at hi")]
    Bracket { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },

    #[error("pole: denominator vanished in {0}")]
    Pole(&'static str),

    #[error("outside the valid regime: {0}")]
    Regime(String),

    #[error("block length N = {n} misses the threshold; the smallest admissible N is {min_n}")]
    Threshold { n: u32, min_n: u64 },

    #[error("empty growth-digit range for offset i = {i} in block k = {k}")]
    DegenerateRange { i: usize, k: usize },

    #[error("exact geometry needs {bits} bits, above the configured cap of {cap}")]
    GeometryTooLarge { bits: u64, cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
