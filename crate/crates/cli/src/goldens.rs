//! Bundled golden rows: published closed-form JD and simulated JMAP error
//! rates for six M = 2 operating points.

use ncfffd::sep::sep_exact;
use ncfffd::simulator::simulate_both;
use ncfffd::{Constellation, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{num, write_json, RunManifest, Table};

pub const GOLDEN_JSON: &str = include_str!("../data/golden_rows.json");

/// Relative tolerance on the closed-form JD value.
pub const JD_REL_TOL: f64 = 0.02;
/// Allowed distance of simulated JMAP from the printed value, in binomial
/// standard errors.
pub const JMAP_SIGMAS: f64 = 3.0;
/// Largest relative JMAP/JD gap quoted for the table.
pub const GAP_LIMIT: f64 = 5.55e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenRow {
    pub snr_db: f64,
    #[serde(rename = "N_C")]
    pub n_c: usize,
    #[serde(rename = "N_B")]
    pub n_b: usize,
    /// Energies in sum-level order `[ε1, η1, η2, ε2]`.
    pub levels: Vec<f64>,
    pub alpha: f64,
    pub p_jmap: f64,
    pub p_jd: f64,
}

impl GoldenRow {
    pub fn system(&self) -> SystemConfig {
        SystemConfig::new(self.n_c, self.n_b, 2, self.snr_db)
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Ok(Constellation::from_level_order(&self.levels, self.alpha)?)
    }
}

pub fn golden_rows() -> Vec<GoldenRow> {
    serde_json::from_str(GOLDEN_JSON).expect("bundled golden file parses")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenResult {
    pub row: GoldenRow,
    pub trials: u64,
    pub jd_closed_form: f64,
    pub jd_simulated: f64,
    pub jmap_simulated: f64,
    pub jmap_std_err: f64,
    pub jd_rel_err: f64,
    /// `(simulated − printed) / σ` with σ the binomial standard error at the
    /// printed value.
    pub jmap_z: f64,
    /// `|P_JMAP − P_JD| / P_JMAP` from the simulated JMAP and closed-form JD.
    pub gap: f64,
    pub gap_limit: f64,
    pub jd_pass: bool,
    pub jmap_pass: bool,
    pub gap_pass: bool,
}

impl GoldenResult {
    pub fn pass(&self) -> bool {
        self.jd_pass && self.jmap_pass && self.gap_pass
    }
}

pub fn check_row(row: &GoldenRow, trials: u64, seed: u64) -> Result<GoldenResult> {
    let sys = row.system();
    let c = row.constellation()?;
    let jd = sep_exact(&c, &sys)?.p_e;
    let (sim_jd, sim_jmap) = simulate_both(&sys, &c, trials, seed)?;
    let n = trials as f64;
    let sigma = (row.p_jmap * (1.0 - row.p_jmap) / n).sqrt();
    let jd_rel_err = (jd - row.p_jd) / row.p_jd;
    let jmap_z = (sim_jmap.joint_ser - row.p_jmap) / sigma;
    let gap = (sim_jmap.joint_ser - jd).abs() / sim_jmap.joint_ser;
    let gap_limit = GAP_LIMIT + JMAP_SIGMAS * sim_jmap.std_err.joint_ser / sim_jmap.joint_ser;
    Ok(GoldenResult {
        row: row.clone(),
        trials,
        jd_closed_form: jd,
        jd_simulated: sim_jd.joint_ser,
        jmap_simulated: sim_jmap.joint_ser,
        jmap_std_err: sim_jmap.std_err.joint_ser,
        jd_rel_err,
        jmap_z,
        gap,
        gap_limit,
        jd_pass: jd_rel_err.abs() <= JD_REL_TOL,
        jmap_pass: jmap_z.abs() <= JMAP_SIGMAS,
        gap_pass: gap <= gap_limit,
    })
}

/// Every bundled row; row `k` is simulated with seed `seed + k`.
pub fn check_all(trials: u64, seed: u64) -> Result<Vec<GoldenResult>> {
    golden_rows()
        .par_iter()
        .enumerate()
        .map(|(k, r)| check_row(r, trials, seed.wrapping_add(k as u64)))
        .collect()
}

pub fn run(m: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    let res = check_all(cfg.simulation.trials, m.seed)?;
    let mut t = Table::new(&[
        "snr_db",
        "n_c",
        "n_b",
        "alpha",
        "printed_p_jmap",
        "printed_p_jd",
        "jd_closed_form",
        "jd_simulated",
        "jmap_simulated",
        "jmap_std_err",
        "jd_rel_err",
        "jmap_z",
        "gap",
        "gap_limit",
        "pass",
    ]);
    let mut lines = Vec::new();
    for r in &res {
        t.push(vec![
            num(r.row.snr_db),
            r.row.n_c.to_string(),
            r.row.n_b.to_string(),
            num(r.row.alpha),
            num(r.row.p_jmap),
            num(r.row.p_jd),
            num(r.jd_closed_form),
            num(r.jd_simulated),
            num(r.jmap_simulated),
            num(r.jmap_std_err),
            num(r.jd_rel_err),
            num(r.jmap_z),
            num(r.gap),
            num(r.gap_limit),
            r.pass().to_string(),
        ]);
        lines.push(format!(
            "{} snr={:>2} N_C={} N_B={}  JD {:.4e} (printed {:.4e}, {:+.2}%)  JMAP {:.4e} (printed {:.4e}, z={:+.1})  gap {:.2}%",
            if r.pass() { "PASS" } else { "FAIL" },
            r.row.snr_db,
            r.row.n_c,
            r.row.n_b,
            r.jd_closed_form,
            r.row.p_jd,
            100.0 * r.jd_rel_err,
            r.jmap_simulated,
            r.row.p_jmap,
            r.jmap_z,
            100.0 * r.gap,
        ));
    }
    t.write(&m.path_in("goldens.csv"))?;
    write_json(&m.path_in("goldens.json"), &res)?;
    for l in &lines {
        println!("{l}");
    }
    let failed = res.iter().filter(|r| !r.pass()).count();
    if failed > 0 {
        return Err(CliError::Golden(failed));
    }
    Ok(Vec::new())
}
