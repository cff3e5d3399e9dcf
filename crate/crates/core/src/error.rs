use thiserror::Error;

use crate::linalg::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("index {index} out of range [0, {bound})")]
    OutOfRange { index: usize, bound: usize },

    #[error("duplicate index {0} in support")]
    DuplicateIndex(usize),

    #[error("no support of size {k} with minimum separation {h_min} fits in {d} atoms")]
    InfeasibleSeparation { h_min: usize, k: usize, d: usize },

    #[error("enumeration of {count} subsets exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u64 },

    #[error("recovery hypothesis violated: eta + eta' = {sum} >= 1")]
    HypothesisViolated { sum: f64 },

    #[error("gram submatrix is singular (lambda_min = {lambda_min:e})")]
    SingularSubmatrix { lambda_min: f64 },

    #[error(
        "basis pursuit did not converge after {iterations} iterations \
         (feasibility {feasibility:e})"
    )]
    SolverNonConvergence {
        iterations: usize,
        feasibility: f64,
        last_iterate: Vec<C64>,
    },

    #[error("outcomes were not computed for the same input")]
    MismatchedInputs,

    #[error("reference signal has zero norm")]
    ZeroSignal,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
