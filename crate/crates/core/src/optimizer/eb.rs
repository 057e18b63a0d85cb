//! Energy backtracking: optimize the sum levels for `N_C → ∞`, recover
//! `(ε, η, α)` from them, then find the smallest `N_C` whose exact error
//! probability is within `Δ_RE` (relative) of the approximation.

use serde::{Deserialize, Serialize};

use super::levels::{optimize_sum_levels_with, LevelOptions};
use super::{Algorithm, OptimizerResult, TraceRow};
use crate::error::{Error, Result};
use crate::model::{build_sum_levels, index_from_pair, Constellation, SystemConfig};
use crate::relay::crossover_probs;
use crate::sep::{sep_approx, sep_from_parts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbParams {
    pub delta_re: f64,
    /// Largest `N_C` tried before giving up.
    pub n_c_cap: usize,
    #[serde(default)]
    pub levels: LevelOptions,
}

impl Default for EbParams {
    fn default() -> Self {
        Self {
            delta_re: 1e-2,
            n_c_cap: 512,
            levels: LevelOptions::default(),
        }
    }
}

impl EbParams {
    pub fn new(delta_re: f64) -> Self {
        Self {
            delta_re,
            ..Self::default()
        }
    }

    pub fn with_cap(mut self, n_c_cap: usize) -> Self {
        self.n_c_cap = n_c_cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_re > 0.0 && self.delta_re < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta_re must lie in (0,1), got {}",
                self.delta_re
            )));
        }
        if self.n_c_cap == 0 {
            return Err(Error::InvalidConfig("N_C cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Inverts the sum-level map: `ε_j = S*_{ℓ(0,j)} − N_o` and
/// `η_j = S*_{ℓ(1,j)} − (1 − α) − N_o`. Tiny negative `η` from round-off are
/// clamped to 0; anything below `−1e−12` is reported as infeasible.
pub fn backtrack(s_star: &[f64], n_o: f64, alpha: f64) -> Result<Constellation<f64>> {
    let n = s_star.len();
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::domain("need 2M >= 4 sum levels"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Infeasible(format!("backtracked alpha = {alpha} is outside (0,1)")));
    }
    let m = n / 2;
    let mut eps = Vec::with_capacity(m);
    let mut eta = Vec::with_capacity(m);
    for j in 1..=m {
        let e = s_star[index_from_pair(0, j, m)? - 1] - n_o;
        let h = s_star[index_from_pair(1, j, m)? - 1] - (1.0 - alpha) - n_o;
        for (name, v) in [("eps", e), ("eta", h)] {
            if v < -1e-12 {
                return Err(Error::Infeasible(format!("{name}_{j} = {v:.3e} is negative")));
            }
        }
        eps.push(e.max(0.0));
        eta.push(h.max(0.0));
    }
    Ok(Constellation { eps, eta, alpha })
}

/// Energy backtracking with the default antenna cap.
pub fn eb(cfg: &SystemConfig<f64>, delta_re: f64) -> Result<OptimizerResult> {
    eb_with(cfg, &EbParams::new(delta_re))
}

pub fn eb_with(cfg: &SystemConfig<f64>, params: &EbParams) -> Result<OptimizerResult> {
    let (c, s_star) = eb_design(cfg, params)?;
    search_antennas(cfg, params, c, s_star, Algorithm::Eb)
}

/// The EB constellation and the levels it came from, without the antenna
/// search.
pub fn eb_design(cfg: &SystemConfig<f64>, params: &EbParams) -> Result<(Constellation<f64>, Vec<f64>)> {
    cfg.validate()?;
    params.validate()?;
    let n_o = cfg.noise();
    let s_star = optimize_sum_levels_with(cfg.m, cfg.n_b, n_o, &params.levels)?;
    // α† = 1 − (S2* − N_o): the direct-link energy equals the second level's
    // net energy, which puts η1 at exactly zero.
    let alpha = 1.0 - (s_star[1] - n_o);
    if !(alpha > 0.0) {
        return Err(Error::Infeasible(format!(
            "S2* - N_o = {} >= 1 leaves no energy for the relay",
            s_star[1] - n_o
        )));
    }
    Ok((backtrack(&s_star, n_o, alpha)?, s_star))
}

/// Delay-tolerant variant: levels are optimized at the effective noise
/// `N_o(1 + Δ_DT)` and the direct-link energy is fixed to `Δ_DT·N_o`.
pub fn dt_eb(cfg: &SystemConfig<f64>, delta_re: f64, delta_dt: f64) -> Result<OptimizerResult> {
    dt_eb_with(cfg, &EbParams::new(delta_re), delta_dt)
}

pub fn dt_eb_with(
    cfg: &SystemConfig<f64>,
    params: &EbParams,
    delta_dt: f64,
) -> Result<OptimizerResult> {
    let (c, s_star) = dt_eb_design(cfg, params, delta_dt)?;
    search_antennas(cfg, params, c, s_star, Algorithm::DtEb)
}

/// The DT-EB constellation and its levels, without the antenna search.
pub fn dt_eb_design(
    cfg: &SystemConfig<f64>,
    params: &EbParams,
    delta_dt: f64,
) -> Result<(Constellation<f64>, Vec<f64>)> {
    cfg.validate()?;
    params.validate()?;
    if !(delta_dt > 0.0 && delta_dt < 1.0) {
        return Err(Error::InvalidConfig(format!("delta_dt must lie in (0,1), got {delta_dt}")));
    }
    let n_o = cfg.noise();
    let n_eff = n_o * (1.0 + delta_dt);
    let s_star = optimize_sum_levels_with(cfg.m, cfg.n_b, n_eff, &params.levels)?;
    let alpha = 1.0 - delta_dt * n_o;
    if !(alpha > 0.0) {
        return Err(Error::Infeasible("delta_dt * N_o >= 1".into()));
    }
    Ok((backtrack(&s_star, n_eff, alpha)?, s_star))
}

fn search_antennas(
    cfg: &SystemConfig<f64>,
    params: &EbParams,
    c: Constellation<f64>,
    s_star: Vec<f64>,
    algorithm: Algorithm,
) -> Result<OptimizerResult> {
    let levels = build_sum_levels(&c, cfg.noise())?;
    let p_approx = sep_approx(&levels, cfg.n_b)?;
    if !(p_approx > 0.0) {
        return Err(Error::Degenerate("approximate error probability is zero".into()));
    }
    let mut trace = Vec::new();
    let mut rel_err = f64::INFINITY;
    let mut probe = cfg.clone();
    for n_c in 1..=params.n_c_cap {
        probe.n_c = n_c;
        let cross = crossover_probs(&probe, c.alpha)?;
        let b = sep_from_parts(&levels, cross, cfg.n_b)?;
        rel_err = (p_approx - b.p_e).abs() / p_approx;
        trace.push(TraceRow {
            iter: n_c,
            eta1: c.eta[0],
            eta2: c.eta[1],
            alpha: c.alpha,
            objective: b.p_e,
        });
        if rel_err < params.delta_re {
            return Ok(OptimizerResult {
                algorithm,
                constellation: c,
                n_c_required: Some(n_c),
                achieved_sep: b.p_e,
                achieved_sep_approx: p_approx,
                sum_levels: Some(s_star),
                trace,
            });
        }
    }
    Err(Error::AntennaCap {
        cap: params.n_c_cap,
        rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backtrack_rejects_negative_eta() {
        let s = [0.1, 0.2, 0.9, 3.0];
        assert!(matches!(backtrack(&s, 0.1, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn backtrack_places_levels() {
        let n_o = 0.01;
        let s = [n_o, 0.3 + n_o, 1.0 + n_o, 2.7 + n_o];
        let c = backtrack(&s, n_o, 0.7).unwrap();
        assert_eq!(c.eps, vec![0.0, 2.7]);
        assert!(c.eta[0].abs() < 1e-15);
        assert!((c.eta[1] - 0.7).abs() < 1e-12);
    }
}
