//! Constellation design: two-layer greedy descent (M = 2), energy
//! backtracking from optimized sum levels (M ≥ 2) and its delay-tolerant
//! variant.

mod eb;
mod levels;
mod tlgd;

use serde::{Deserialize, Serialize};

use crate::model::Constellation;

pub use eb::{backtrack, dt_eb, dt_eb_design, dt_eb_with, eb, eb_design, eb_with, EbParams};
pub use levels::{objective as levels_objective, optimize_sum_levels, optimize_sum_levels_with, LevelOptions};
pub use tlgd::{alpha_balance, eta2_balance, tlgd, tlgd_objective, InnerRule, TlgdParams, TlgdPoint};

/// One logged optimizer step. For the backtracking algorithms `iter` is the
/// antenna count tried and `objective` the exact error probability there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub eta1: f64,
    pub eta2: f64,
    pub alpha: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Tlgd,
    Eb,
    DtEb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub algorithm: Algorithm,
    pub constellation: Constellation<f64>,
    /// Smallest `N_C` meeting the relative-error target (backtracking only).
    pub n_c_required: Option<usize>,
    /// Exact JD error probability of the returned design.
    pub achieved_sep: f64,
    /// Large-`N_C` approximation at the returned design's sum levels.
    pub achieved_sep_approx: f64,
    /// Optimized sum levels `S*` the design was backtracked from.
    pub sum_levels: Option<Vec<f64>>,
    pub trace: Vec<TraceRow>,
}
