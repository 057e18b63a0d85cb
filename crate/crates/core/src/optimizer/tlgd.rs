//! Two-layer greedy descent for M = 2.
//!
//! With `ε1 = 0` and the average-energy constraint solved for `ε2`, the design
//! has three free variables `(η1, η2, α)`. The inner layer alternates between
//! an update of `η2` (for fixed `α`) and of `α` (for fixed `η2`), each located
//! by bisection; the outer layer walks `η1` upward in steps of `δ_η1` while
//! that keeps improving.
//!
//! Two inner rules are available. [`InnerRule::Stationary`] bisects on the
//! slope of the objective, where the rates of its increasing and decreasing
//! parts cancel. [`InnerRule::Intersection`] bisects on the difference of the
//! parts themselves; it is cheaper but lands noticeably above the minimum.

use serde::{Deserialize, Serialize};

use super::{Algorithm, OptimizerResult, TraceRow};
use crate::error::{Error, Result};
use crate::model::{build_sum_levels, Constellation, SystemConfig};
use crate::numerics::{bisect_root, Tolerance};
use crate::relay::crossover_probs;
use crate::sep::{per_level_errors, sep_approx, sep_exact};

/// How the inner layer picks its next `η2` / `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerRule {
    /// Root of the objective's slope along the coordinate.
    #[default]
    Stationary,
    /// Root of (decreasing terms − increasing terms).
    Intersection,
}

/// Inputs of the greedy descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlgdParams {
    pub delta_pe: f64,
    pub delta_eta1: f64,
    pub eta2_init: f64,
    pub alpha_init: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    #[serde(default)]
    pub rule: InnerRule,
}

impl Default for TlgdParams {
    fn default() -> Self {
        Self {
            delta_pe: 1e-5,
            delta_eta1: 1e-3,
            eta2_init: 1.25,
            alpha_init: 0.5,
            max_outer: 2_000,
            max_inner: 500,
            rule: InnerRule::Stationary,
        }
    }
}

impl TlgdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_pe > 0.0 && self.delta_eta1 > 0.0 && self.eta2_init > 0.0) {
            return Err(Error::InvalidConfig("TLGD steps and eta2_init must be positive".into()));
        }
        if !(self.alpha_init > 0.0 && self.alpha_init < 1.0) {
            return Err(Error::InvalidConfig("alpha_init must lie in (0,1)".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidConfig("TLGD iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

/// A candidate `(η1, η2, α)`; `ε1 = 0` and `ε2 = 2(1+α) − η1 − η2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlgdPoint {
    pub eta1: f64,
    pub eta2: f64,
    pub alpha: f64,
}

impl TlgdPoint {
    pub fn constellation(&self) -> Constellation<f64> {
        let eps2 = 2.0 * (1.0 + self.alpha) - self.eta1 - self.eta2;
        Constellation {
            eps: vec![0.0, eps2],
            eta: vec![self.eta1, self.eta2],
            alpha: self.alpha,
        }
    }
}

const EDGE: f64 = 1e-6;

/// Feasible open interval for `η2` given `η1` and `α` (keeps `S2 < S3 < S4`).
fn eta2_bracket(eta1: f64, alpha: f64) -> (f64, f64) {
    let hi = (1.0 + alpha - 0.5 * eta1).min((1.0 + 3.0 * alpha - eta1) / 2.0);
    (eta1 + EDGE, hi - EDGE)
}

/// Feasible open interval for `α` given `η1` and `η2`.
fn alpha_bracket(eta1: f64, eta2: f64) -> (f64, f64) {
    let lo = (1e-4f64).max((2.0 * eta2 + eta1 - 1.0) / 3.0 + EDGE);
    (lo, 1.0 - 1e-4)
}

struct Terms {
    pe: [f64; 4],
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
    rho: Vec<f64>,
    s: Vec<f64>,
}

fn terms(cfg: &SystemConfig<f64>, p: TlgdPoint) -> Result<Terms> {
    let c = p.constellation();
    let levels = build_sum_levels(&c, cfg.noise())?;
    let x = crossover_probs(cfg, p.alpha)?;
    let per = per_level_errors(&levels, cfg.n_b)?;
    let rho = crate::sep::thresholds(&levels.s, cfg.n_b)?;
    Ok(Terms {
        pe: [per[0].0, per[1].0, per[2].0, per[3].0],
        p00: x.p00,
        p01: x.p01,
        p10: x.p10,
        p11: x.p11,
        rho,
        s: levels.s,
    })
}

/// `¼(P00·P_{e,S4} + P11(P_{e,S2} + P_{e,S3}) + 2(P01 + P10))`.
pub fn tlgd_objective(cfg: &SystemConfig<f64>, p: TlgdPoint) -> Result<f64> {
    let t = terms(cfg, p)?;
    Ok(0.25 * (t.p00 * t.pe[3] + t.p11 * (t.pe[1] + t.pe[2]) + 2.0 * (t.p01 + t.p10)))
}

/// Decreasing-minus-increasing parts of the objective as `η2` grows.
pub fn eta2_balance(cfg: &SystemConfig<f64>, p: TlgdPoint) -> Result<f64> {
    let t = terms(cfg, p)?;
    let nb = cfg.n_b as f64;
    let g = |a: f64, x: f64| crate::numerics::reg_gamma_pair(a, x);
    let dec = g(nb, t.rho[1] / t.s[1])?.1 + g(nb, t.rho[1] / t.s[2])?.0;
    let inc = g(nb, t.rho[2] / t.s[2])?.1 + g(nb, t.rho[2] / t.s[3])?.0;
    Ok(dec - inc)
}

/// Decreasing-minus-increasing parts of the objective as `α` grows.
pub fn alpha_balance(cfg: &SystemConfig<f64>, p: TlgdPoint) -> Result<f64> {
    let t = terms(cfg, p)?;
    let dec = t.p00 * t.pe[3] + t.p11 * (t.pe[1] + t.pe[2]);
    let inc = 2.0 * (t.p01 + t.p10);
    Ok(dec - inc)
}

fn root_tol() -> Tolerance<f64> {
    Tolerance {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        max_iter: 200,
    }
}

fn solve_eta2(cfg: &SystemConfig<f64>, rule: InnerRule, eta1: f64, alpha: f64) -> Result<f64> {
    let (lo, hi) = eta2_bracket(eta1, alpha);
    if !(hi > lo) {
        return Err(Error::Infeasible(format!("empty eta2 bracket at eta1={eta1}, alpha={alpha}")));
    }
    let at = |eta2: f64| TlgdPoint { eta1, eta2, alpha };
    match rule {
        InnerRule::Intersection => {
            let f = |eta2: f64| eta2_balance(cfg, at(eta2)).unwrap_or(f64::NAN);
            bisect_root(f, lo, hi, &root_tol())
        }
        InnerRule::Stationary => stationary(|v| tlgd_objective(cfg, at(v)), lo, hi),
    }
}

fn solve_alpha(cfg: &SystemConfig<f64>, rule: InnerRule, eta1: f64, eta2: f64) -> Result<f64> {
    let (lo, hi) = alpha_bracket(eta1, eta2);
    if !(hi > lo) {
        return Err(Error::Infeasible(format!("empty alpha bracket at eta1={eta1}, eta2={eta2}")));
    }
    let at = |alpha: f64| TlgdPoint { eta1, eta2, alpha };
    match rule {
        InnerRule::Intersection => {
            let f = |alpha: f64| alpha_balance(cfg, at(alpha)).unwrap_or(f64::NAN);
            bisect_root(f, lo, hi, &root_tol())
        }
        InnerRule::Stationary => stationary(|v| tlgd_objective(cfg, at(v)), lo, hi),
    }
}

/// Bisects on the central-difference slope of `f` over `[lo, hi]`; when the
/// slope does not change sign the better endpoint is returned.
fn stationary<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let h = (hi - lo) * 1e-7;
    let slope = |x: f64| {
        let a = (x - h).max(lo);
        let b = (x + h).min(hi);
        match (f(a), f(b)) {
            (Ok(fa), Ok(fb)) => (fb - fa) / (b - a),
            _ => f64::NAN,
        }
    };
    match bisect_root(slope, lo, hi, &root_tol()) {
        Ok(x) => Ok(x),
        Err(Error::NoSignChange { .. }) => Ok(if f(lo)? <= f(hi)? { lo } else { hi }),
        Err(e) => Err(e),
    }
}

/// Pulls `(η2, α)` back inside the feasible region for the given `η1`.
fn project(p: TlgdPoint) -> Option<TlgdPoint> {
    let alpha = p.alpha.clamp(1e-4, 1.0 - 1e-4);
    let (lo, hi) = eta2_bracket(p.eta1, alpha);
    if !(hi > lo) {
        return None;
    }
    let mid_pad = (hi - lo) * 1e-3;
    let eta2 = p.eta2.clamp(lo + mid_pad, hi - mid_pad);
    Some(TlgdPoint {
        eta1: p.eta1,
        eta2,
        alpha,
    })
}

fn row(iter: usize, p: TlgdPoint, objective: f64) -> TraceRow {
    TraceRow {
        iter,
        eta1: p.eta1,
        eta2: p.eta2,
        alpha: p.alpha,
        objective,
    }
}

enum Inner {
    Done(TlgdPoint, f64),
    Stuck,
}

/// Runs the greedy descent. Requires `cfg.m == 2`.
pub fn tlgd(cfg: &SystemConfig<f64>, params: &TlgdParams) -> Result<OptimizerResult> {
    cfg.validate()?;
    params.validate()?;
    if cfg.m != 2 {
        return Err(Error::InvalidConfig(format!("TLGD is defined for M = 2 only, got M = {}", cfg.m)));
    }
    let delta = params.delta_pe;
    let start = project(TlgdPoint {
        eta1: 0.0,
        eta2: params.eta2_init,
        alpha: params.alpha_init,
    })
    .ok_or_else(|| Error::Infeasible("initial point has no feasible eta2".into()))?;
    let mut trace = Vec::new();
    let mut step = 0usize;
    let mut cur = start;
    let mut f_cur = tlgd_objective(cfg, cur)?;
    trace.push(row(step, cur, f_cur));
    let mut pe_o = f_cur;
    let mut saved = (cur, f_cur);
    let mut result: Option<(TlgdPoint, f64)> = None;

    for _ in 0..params.max_outer {
        let inner = inner_descent(cfg, params, &mut cur, &mut f_cur, &mut trace, &mut step);
        let (iota, pe_iota) = match inner {
            Ok(Inner::Done(p, f)) => (p, f),
            Ok(Inner::Stuck) | Err(_) if cur.eta1 > 0.0 => {
                result = Some(saved);
                break;
            }
            Ok(Inner::Stuck) => (cur, f_cur),
            Err(e) => return Err(e),
        };
        let d = pe_iota - pe_o;
        if d <= -delta {
            saved = (iota, pe_iota);
            pe_o = pe_iota;
            let next = TlgdPoint {
                eta1: iota.eta1 + params.delta_eta1,
                ..iota
            };
            match project(next) {
                Some(p) => {
                    cur = p;
                    f_cur = tlgd_objective(cfg, cur)?;
                }
                None => {
                    result = Some(saved);
                    break;
                }
            }
        } else if d >= delta {
            result = Some(saved);
            break;
        } else {
            result = Some(if pe_iota <= saved.1 { (iota, pe_iota) } else { saved });
            break;
        }
    }
    let (best, f_best) = result.ok_or(Error::NoConvergence {
        iterations: params.max_outer,
    })?;
    step += 1;
    trace.push(row(step, best, f_best));
    let constellation = best.constellation();
    let breakdown = sep_exact(&constellation, cfg)?;
    let levels = build_sum_levels(&constellation, cfg.noise())?;
    Ok(OptimizerResult {
        algorithm: Algorithm::Tlgd,
        achieved_sep: breakdown.p_e,
        achieved_sep_approx: sep_approx(&levels, cfg.n_b)?,
        constellation,
        n_c_required: None,
        sum_levels: None,
        trace,
    })
}

fn inner_descent(
    cfg: &SystemConfig<f64>,
    params: &TlgdParams,
    cur: &mut TlgdPoint,
    f_cur: &mut f64,
    trace: &mut Vec<TraceRow>,
    step: &mut usize,
) -> Result<Inner> {
    let delta = params.delta_pe;
    for _ in 0..params.max_inner {
        let eta2_i = solve_eta2(cfg, params.rule, cur.eta1, cur.alpha)?;
        let alpha_i = solve_alpha(cfg, params.rule, cur.eta1, cur.eta2)?;
        let p_eta2 = TlgdPoint { eta2: eta2_i, ..*cur };
        let p_alpha = TlgdPoint { alpha: alpha_i, ..*cur };
        let pe_eta2 = tlgd_objective(cfg, p_eta2)?;
        let pe_alpha = tlgd_objective(cfg, p_alpha)?;
        let diff = pe_alpha - pe_eta2;
        let (cand, f_cand, tie) = if diff >= delta {
            (p_eta2, pe_eta2, false)
        } else if diff <= -delta {
            (p_alpha, pe_alpha, false)
        } else if pe_alpha <= pe_eta2 {
            (p_alpha, pe_alpha, true)
        } else {
            (p_eta2, pe_eta2, true)
        };
        // A move is only taken when it lowers the objective by at least δ.
        if tie || f_cand > *f_cur - delta {
            return Ok(Inner::Done(
                if f_cand < *f_cur { cand } else { *cur },
                f_cand.min(*f_cur),
            ));
        }
        *cur = cand;
        *f_cur = f_cand;
        *step += 1;
        trace.push(row(*step, *cur, *f_cur));
    }
    Ok(Inner::Stuck)
}
