//! Dave: energy detector (closed form and frame simulation), Gold-sequence
//! scrambler, KSG mutual-information estimator and correlation detector.

mod cd;
mod ed;
mod gold;
mod ksg;

use serde::{Deserialize, Serialize};

pub use cd::{attack_mi, baseline_mi, cd_curve, cd_detect, CdMode, CdParams, BASELINE_FRAMES};
pub use ed::{
    cdf_vl, ed_monte_carlo, ed_pfa, ed_pmd, energy_scale, pdf_ul, pdf_vl,
    simulate_frame_energies, EdParams, Hypothesis, Scrambler,
};
pub use gold::{gold_bits, m_sequence, periodic_cross_correlation, GoldConfig};
pub use ksg::ksg_mi;

/// One detector output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    #[serde(rename = "L")]
    pub l: usize,
    pub tau: f64,
    /// `ed` for the energy detector, otherwise the correlation-detector mode.
    pub mode: String,
    pub p_fa: Option<f64>,
    pub p_md: Option<f64>,
    pub p_d_cd: Option<f64>,
    pub seed: u64,
}
