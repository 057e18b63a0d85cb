use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("sum levels not strictly increasing at l={ell}")]
    Ordering { ell: usize },

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid constellation: {}", fmt_violations(.0))]
    InvalidConstellation(Vec<Violation>),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("antenna search exhausted at N_C = {cap} (relative error {rel_err:.3e})")]
    AntennaCap { cap: usize, rel_err: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
