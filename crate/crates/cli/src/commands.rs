//! One driver per subcommand. Each writes its artifacts under the run's
//! output directory and returns a short human-readable summary.

use ncfffd::adversary::{cd_curve, ed_pfa, ed_pmd, CdParams, DetectorReport, EdParams};
use ncfffd::model::constellation_violations_with;
use ncfffd::optimizer::{dt_eb_design, dt_eb_with, eb_design, eb_with, tlgd, EbParams, OptimizerResult};
use ncfffd::sep::sep_exact;
use ncfffd::simulator::{simulate, simulate_both, simulate_delayed, Decoder, SimReport};
use ncfffd::{Constellation, SepBreakdown, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algo, DecoderChoice, Design, DetectorKind, RunConfig, SweepKind};
use crate::error::{CliError, Result};
use crate::output::{num, opt_num, write_json, RunManifest, Table};

/// Slack on the average-energy constraint for constellations read from
/// files, which are usually printed with a few decimals.
pub const FILE_ENERGY_TOL: f64 = 1e-3;

fn eb_params(cfg: &RunConfig) -> EbParams {
    EbParams::new(cfg.optimizer.delta_re).with_cap(cfg.optimizer.n_c_cap)
}

pub fn run_optimizer(sys: &SystemConfig, cfg: &RunConfig, algo: Algo) -> Result<OptimizerResult> {
    let o = &cfg.optimizer;
    Ok(match algo {
        Algo::Tlgd => tlgd(sys, &o.tlgd)?,
        Algo::Eb => eb_with(sys, &eb_params(cfg))?,
        Algo::DtEb => dt_eb_with(sys, &eb_params(cfg), o.delta_dt)?,
    })
}

/// The configured constellation, checked against `sys`.
pub fn given_constellation(sys: &SystemConfig, cfg: &RunConfig) -> Result<Constellation> {
    let c = cfg.constellation.clone().ok_or_else(|| {
        CliError::Usage("no constellation: pass --constellation or set `constellation` in the config".into())
    })?;
    let v = constellation_violations_with(&c, sys, FILE_ENERGY_TOL);
    if !v.is_empty() {
        return Err(ncfffd::Error::InvalidConstellation(v).into());
    }
    Ok(c)
}

/// A constellation for one operating point plus the `N_C` it should run at.
#[derive(Debug, Clone)]
pub struct Designed {
    pub c: Constellation,
    pub n_c: usize,
    /// `ok`, or `antenna-cap` when the antenna search hit its cap and `n_c`
    /// is the cap itself.
    pub status: &'static str,
}

pub fn design_point(sys: &SystemConfig, cfg: &RunConfig, d: Design) -> Result<Designed> {
    let ok = |c, n_c| Designed { c, n_c, status: "ok" };
    let capped = |c, n_c| Designed {
        c,
        n_c,
        status: "antenna-cap",
    };
    let p = eb_params(cfg);
    match d {
        Design::Fixed => Ok(ok(given_constellation(sys, cfg)?, sys.n_c)),
        Design::Tlgd => Ok(ok(tlgd(sys, &cfg.optimizer.tlgd)?.constellation, sys.n_c)),
        Design::Eb => match eb_with(sys, &p) {
            Ok(r) => Ok(ok(r.constellation, r.n_c_required.unwrap_or(sys.n_c))),
            Err(ncfffd::Error::AntennaCap { cap, .. }) => Ok(capped(eb_design(sys, &p)?.0, cap)),
            Err(e) => Err(e.into()),
        },
        Design::DtEb => match dt_eb_with(sys, &p, cfg.optimizer.delta_dt) {
            Ok(r) => Ok(ok(r.constellation, r.n_c_required.unwrap_or(sys.n_c))),
            Err(ncfffd::Error::AntennaCap { cap, .. }) => {
                Ok(capped(dt_eb_design(sys, &p, cfg.optimizer.delta_dt)?.0, cap))
            }
            Err(e) => Err(e.into()),
        },
    }
}

pub fn optimize(m: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    let r = run_optimizer(&cfg.system, cfg, cfg.optimizer.algo)?;
    write_json(&m.path_in("constellation.json"), &r)?;
    let mut t = Table::new(&["iter", "eta1", "eta2", "alpha", "objective"]);
    for row in &r.trace {
        t.push(vec![
            row.iter.to_string(),
            num(row.eta1),
            num(row.eta2),
            num(row.alpha),
            num(row.objective),
        ]);
    }
    t.write(&m.path_in("trace.csv"))?;
    let c = &r.constellation;
    Ok(vec![
        format!("eps   = {:?}", c.eps),
        format!("eta   = {:?}", c.eta),
        format!("alpha = {}", c.alpha),
        format!(
            "N_C   = {}",
            r.n_c_required.map_or_else(|| cfg.system.n_c.to_string(), |n| n.to_string())
        ),
        format!("P_e   = {:.6e}  (approx {:.6e})", r.achieved_sep, r.achieved_sep_approx),
    ])
}

#[derive(Serialize)]
struct Evaluation<'a> {
    system: &'a SystemConfig,
    constellation: &'a Constellation,
    breakdown: SepBreakdown,
}

pub fn evaluate(m: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    let sys = &cfg.system;
    let c = given_constellation(sys, cfg)?;
    let b = sep_exact(&c, sys)?;
    let mut t = Table::new(&[
        "N_C", "N_B", "M", "snr_db", "alpha", "p_e", "p_e_prime", "p_e_approx", "p01", "p10",
    ]);
    t.push(vec![
        sys.n_c.to_string(),
        sys.n_b.to_string(),
        sys.m.to_string(),
        num(sys.snr_db),
        num(c.alpha),
        num(b.p_e),
        num(b.p_e_prime),
        num(b.p_e_approx),
        num(b.cross.p01),
        num(b.cross.p10),
    ]);
    t.write(&m.path_in("evaluate.csv"))?;
    let lines = vec![
        format!("P_e        = {:.6e}", b.p_e),
        format!("upper P_e' = {:.6e}", b.p_e_prime),
        format!("approx     = {:.6e}", b.p_e_approx),
        format!("p01, p10   = {:.6e}, {:.6e}", b.cross.p01, b.cross.p10),
    ];
    write_json(
        &m.path_in("evaluate.json"),
        &Evaluation {
            system: sys,
            constellation: &c,
            breakdown: b,
        },
    )?;
    Ok(lines)
}

const SIM_COLUMNS: [&str; 11] = [
    "decoder",
    "delay_n",
    "trials",
    "joint_ser",
    "joint_ser_std_err",
    "alice_ber",
    "charlie_ser",
    "p01",
    "p10",
    "closed_form_p_e",
    "seed",
];

fn sim_row(r: &SimReport, exact: f64) -> Vec<String> {
    vec![
        serde_json::to_value(r.decoder).unwrap().as_str().unwrap().to_string(),
        r.delay_n.to_string(),
        r.trials.to_string(),
        num(r.joint_ser),
        num(r.std_err.joint_ser),
        num(r.alice_ber),
        num(r.charlie_ser),
        num(r.relay_error_rate.p01),
        num(r.relay_error_rate.p10),
        num(exact),
        r.seed.to_string(),
    ]
}

pub fn simulate_cmd(m: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    let sys = &cfg.system;
    let c = given_constellation(sys, cfg)?;
    let trials = cfg.simulation.trials;
    let exact = sep_exact(&c, sys)?.p_e;
    let reports = if sys.delay_n > 0 {
        if cfg.simulation.decoder == DecoderChoice::Jmap {
            return Err(CliError::Usage("the delayed simulation supports only the JD decoder".into()));
        }
        vec![simulate_delayed(sys, &c, trials, m.seed)?]
    } else {
        match cfg.simulation.decoder {
            DecoderChoice::Jd => vec![simulate(sys, &c, trials, m.seed, Decoder::Jd)?],
            DecoderChoice::Jmap => vec![simulate(sys, &c, trials, m.seed, Decoder::Jmap)?],
            DecoderChoice::Both => {
                let (a, b) = simulate_both(sys, &c, trials, m.seed)?;
                vec![a, b]
            }
        }
    };
    let mut t = Table::new(&SIM_COLUMNS);
    let mut lines = vec![format!("closed-form P_e = {exact:.6e}")];
    for r in &reports {
        t.push(sim_row(r, exact));
        lines.push(format!(
            "{:?}: joint SER {:.6e} ± {:.1e}  ({} trials, delay {})",
            r.decoder, r.joint_ser, r.std_err.joint_ser, r.trials, r.delay_n
        ));
    }
    t.write(&m.path_in("simulate.csv"))?;
    write_json(&m.path_in("simulate.json"), &reports)?;
    Ok(lines)
}

/// `α` for the energy detector: explicit, the configured constellation's, or
/// the EB design's.
fn ed_alpha(sys: &SystemConfig, cfg: &RunConfig) -> Result<f64> {
    if let Some(a) = cfg.detector.alpha {
        return Ok(a);
    }
    if let Some(c) = &cfg.constellation {
        return Ok(c.alpha);
    }
    Ok(eb_design(sys, &eb_params(cfg))?.0.alpha)
}

fn ed_reports(sys: &SystemConfig, cfg: &RunConfig, seed: u64) -> Result<Vec<DetectorReport>> {
    let d = &cfg.detector;
    let alpha = ed_alpha(sys, cfg)?;
    let n_tilde = d.n_tilde.unwrap_or_else(|| sys.noise());
    let mut out = Vec::new();
    for &l in &d.l {
        for &tau in &d.tau {
            let p = EdParams::new(l, tau, n_tilde, sys.partial_d);
            out.push(DetectorReport {
                l,
                tau,
                mode: "ed".into(),
                p_fa: Some(ed_pfa(&p)?),
                p_md: Some(ed_pmd(&p, alpha)?),
                p_d_cd: None,
                seed,
            });
        }
    }
    Ok(out)
}

fn cd_reports(sys: &SystemConfig, cfg: &RunConfig, seed: u64) -> Result<Vec<DetectorReport>> {
    let d = &cfg.detector;
    let (c, sys) = match &cfg.constellation {
        Some(_) => (given_constellation(sys, cfg)?, sys.clone()),
        None => {
            let p = design_point(sys, cfg, Design::Eb)?;
            let mut s = sys.clone();
            s.n_c = p.n_c;
            (p.c, s)
        }
    };
    let mode = serde_json::to_value(d.mode).unwrap().as_str().unwrap().to_string();
    let mut out = Vec::new();
    for &l in &d.l {
        let mut p = CdParams::new(d.k, l, 0.0);
        p.gold = d.gold.clone();
        for (tau, pd) in cd_curve(&sys, &c, &p, d.mode, &d.tau, d.trials, seed)? {
            out.push(DetectorReport {
                l,
                tau,
                mode: mode.clone(),
                p_fa: None,
                p_md: None,
                p_d_cd: Some(pd),
                seed,
            });
        }
    }
    Ok(out)
}

fn detector_table(reports: &[DetectorReport]) -> Table {
    let mut t = Table::new(&["L", "tau", "mode", "p_fa", "p_md", "p_d_cd", "seed"]);
    for r in reports {
        t.push(vec![
            r.l.to_string(),
            num(r.tau),
            r.mode.clone(),
            opt_num(r.p_fa),
            opt_num(r.p_md),
            opt_num(r.p_d_cd),
            r.seed.to_string(),
        ]);
    }
    t
}

pub fn detect(m: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    let d = &cfg.detector;
    if d.l.is_empty() || d.tau.is_empty() {
        return Err(CliError::Usage("detector.L and detector.tau must be non-empty".into()));
    }
    let reports = match d.kind {
        DetectorKind::Ed => ed_reports(&cfg.system, cfg, m.seed)?,
        DetectorKind::Cd => cd_reports(&cfg.system, cfg, m.seed)?,
    };
    detector_table(&reports).write(&m.path_in("detect.csv"))?;
    write_json(&m.path_in("detect.json"), &reports)?;
    Ok(reports
        .iter()
        .map(|r| match (r.p_fa, r.p_md, r.p_d_cd) {
            (Some(fa), Some(md), _) => {
                format!("L={:<5} tau={:<8} P_FA={fa:.4e} P_MD={md:.4e} sum={:.4e}", r.l, r.tau, fa + md)
            }
            (_, _, Some(pd)) => format!("L={:<5} tau={:<8} {} P_D={pd:.4}", r.l, r.tau, r.mode),
            _ => String::new(),
        })
        .collect())
}

fn axis<T: Clone>(name: &str, v: &Option<Vec<T>>, fallback: T) -> Result<Vec<Option<T>>> {
    match v {
        None => Ok(vec![Some(fallback)]),
        Some(v) if v.is_empty() => Err(CliError::Usage(format!("sweep axis `{name}` is empty"))),
        Some(v) => Ok(v.iter().cloned().map(Some).collect()),
    }
}

/// One operating point of a SEP sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SepPoint {
    pub index: usize,
    pub m: usize,
    pub n_b: usize,
    pub snr_db: f64,
    pub n_c: Option<usize>,
    pub delay_n: usize,
    pub design: Design,
    pub status: String,
    pub constellation: Option<Constellation>,
    pub alpha: Option<f64>,
    pub sep_exact: Option<f64>,
    pub sep_upper: Option<f64>,
    pub sep_approx: Option<f64>,
    pub simulated_ser: Option<f64>,
    pub std_err: Option<f64>,
    pub error: Option<String>,
}

fn sep_point(cfg: &RunConfig, mut p: SepPoint, n_c_axis: Option<usize>, seed: u64) -> SepPoint {
    let mut sys = cfg.system.clone();
    sys.m = p.m;
    sys.n_b = p.n_b;
    sys.snr_db = p.snr_db;
    sys.delay_n = p.delay_n;
    let mut run = |p: &mut SepPoint| -> Result<()> {
        let d = design_point(&sys, cfg, p.design)?;
        sys.n_c = n_c_axis.unwrap_or(d.n_c);
        p.n_c = Some(sys.n_c);
        p.status = d.status.into();
        p.alpha = Some(d.c.alpha);
        let b = sep_exact(&d.c, &sys)?;
        p.sep_exact = Some(b.p_e);
        p.sep_upper = Some(b.p_e_prime);
        p.sep_approx = Some(b.p_e_approx);
        if cfg.sweep.trials > 0 {
            let r = simulate_delayed(&sys, &d.c, cfg.sweep.trials, seed)?;
            p.simulated_ser = Some(r.joint_ser);
            p.std_err = Some(r.std_err.joint_ser);
        }
        p.constellation = Some(d.c);
        Ok(())
    };
    if let Err(e) = run(&mut p) {
        p.status = "failed".into();
        p.error = Some(e.to_string());
    }
    p
}

fn sep_sweep(m: &RunManifest, cfg: &RunConfig) -> Result<(Table, Vec<String>)> {
    let s = &cfg.sweep;
    let sys = &cfg.system;
    let ms = axis("M", &s.m, sys.m)?;
    let nbs = axis("N_B", &s.n_b, sys.n_b)?;
    let snrs = axis("snr_db", &s.snr_db, sys.snr_db)?;
    let delays = axis("delay_n", &s.delay_n, sys.delay_n)?;
    let ncs: Vec<Option<usize>> = match &s.n_c {
        None => vec![None],
        Some(v) if v.is_empty() => return Err(CliError::Usage("sweep axis `N_C` is empty".into())),
        Some(v) => v.iter().copied().map(Some).collect(),
    };
    let mut jobs = Vec::new();
    for &mm in &ms {
        for &nb in &nbs {
            for &snr in &snrs {
                for &nc in &ncs {
                    for &dl in &delays {
                        let index = jobs.len();
                        jobs.push((
                            SepPoint {
                                index,
                                m: mm.unwrap(),
                                n_b: nb.unwrap(),
                                snr_db: snr.unwrap(),
                                n_c: nc,
                                delay_n: dl.unwrap(),
                                design: s.design,
                                status: String::new(),
                                constellation: None,
                                alpha: None,
                                sep_exact: None,
                                sep_upper: None,
                                sep_approx: None,
                                simulated_ser: None,
                                std_err: None,
                                error: None,
                            },
                            nc,
                        ));
                    }
                }
            }
        }
    }
    let dir = m.path_in("points");
    let points: Vec<SepPoint> = jobs
        .into_par_iter()
        .map(|(p, nc)| {
            let seed = m.seed.wrapping_add(p.index as u64);
            let p = sep_point(cfg, p, nc, seed);
            write_json(&dir.join(format!("point_{:05}.json", p.index)), &p).map(|_| p)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "m",
        "n_b",
        "snr_db",
        "n_c",
        "delay_n",
        "design",
        "status",
        "alpha",
        "sep_exact",
        "sep_upper",
        "sep_approx",
        "simulated_ser",
        "std_err",
    ]);
    let mut lines = Vec::new();
    for p in &points {
        let design = serde_json::to_value(p.design).unwrap().as_str().unwrap().to_string();
        t.push(vec![
            p.m.to_string(),
            p.n_b.to_string(),
            num(p.snr_db),
            p.n_c.map(|n| n.to_string()).unwrap_or_default(),
            p.delay_n.to_string(),
            design,
            p.status.clone(),
            opt_num(p.alpha),
            opt_num(p.sep_exact),
            opt_num(p.sep_upper),
            opt_num(p.sep_approx),
            opt_num(p.simulated_ser),
            opt_num(p.std_err),
        ]);
        lines.push(format!(
            "M={} N_B={} snr={:>5} N_C={:>5} delay={} {:<11} P_e={}",
            p.m,
            p.n_b,
            p.snr_db,
            p.n_c.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            p.delay_n,
            p.status,
            p.sep_exact
                .map(|x| format!("{x:.4e}"))
                .unwrap_or_else(|| p.error.clone().unwrap_or_default()),
        ));
    }
    Ok((t, lines))
}

fn detector_sweep(m: &RunManifest, cfg: &RunConfig, kind: DetectorKind) -> Result<(Table, Vec<String>)> {
    let s = &cfg.sweep;
    let sys = &cfg.system;
    let snrs = axis("snr_db", &s.snr_db, sys.snr_db)?;
    let ds = axis("partial_d", &s.partial_d, sys.partial_d)?;
    if cfg.detector.l.is_empty() || cfg.detector.tau.is_empty() {
        return Err(CliError::Usage("detector.L and detector.tau must be non-empty".into()));
    }
    let mut pts = Vec::new();
    for &snr in &snrs {
        for &d in &ds {
            pts.push((snr.unwrap(), d.unwrap()));
        }
    }
    let rows: Vec<(f64, f64, Result<Vec<DetectorReport>>)> = pts
        .into_par_iter()
        .enumerate()
        .map(|(i, (snr, d))| {
            let mut sys = sys.clone();
            sys.snr_db = snr;
            sys.partial_d = d;
            let seed = m.seed.wrapping_add(i as u64);
            let r = match kind {
                DetectorKind::Ed => ed_reports(&sys, cfg, seed),
                DetectorKind::Cd => cd_reports(&sys, cfg, seed),
            };
            (snr, d, r)
        })
        .collect();
    let mut t = Table::new(&[
        "snr_db", "partial_d", "L", "tau", "mode", "status", "p_fa", "p_md", "p_d_cd", "seed",
    ]);
    let mut lines = Vec::new();
    for (snr, d, r) in rows {
        match r {
            Ok(reps) => {
                for r in reps {
                    t.push(vec![
                        num(snr),
                        num(d),
                        r.l.to_string(),
                        num(r.tau),
                        r.mode.clone(),
                        "ok".into(),
                        opt_num(r.p_fa),
                        opt_num(r.p_md),
                        opt_num(r.p_d_cd),
                        r.seed.to_string(),
                    ]);
                }
            }
            Err(e) => {
                lines.push(format!("snr={snr} partial_d={d}: {e}"));
                t.push(vec![
                    num(snr),
                    num(d),
                    String::new(),
                    String::new(),
                    String::new(),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    lines.insert(0, format!("{} rows", t.len()));
    Ok((t, lines))
}

pub fn sweep(m: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    let (t, lines) = match cfg.sweep.kind {
        SweepKind::Sep => sep_sweep(m, cfg)?,
        SweepKind::Ed => detector_sweep(m, cfg, DetectorKind::Ed)?,
        SweepKind::Cd => detector_sweep(m, cfg, DetectorKind::Cd)?,
    };
    t.write(&m.path_in("sweep.csv"))?;
    Ok(lines)
}
