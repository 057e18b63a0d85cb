//! Dave's correlation detector: KSG mutual information between per-slot
//! energies on the jammed band (`U`) and the helper band (`V`), compared to
//! a long-run pre-attack estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_constellation, Constellation, SystemConfig};
use crate::relay::crossover_probs;

use super::gold::{gold_bits, GoldConfig};
use super::ksg::ksg_mi;

/// Pre-attack frames averaged for the baseline estimate.
pub const BASELINE_FRAMES: u64 = 1_000;
const BASELINE_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdMode {
    /// Gold-scrambled dummy bits on the jammed band.
    Gold,
    /// Alice repeats her information bit on the jammed band.
    Repetition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdParams {
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub tau_cd: f64,
    /// `E[Ĩ_J(U,V)]`; estimated from [`BASELINE_FRAMES`] frames when absent.
    pub baseline_mi: Option<f64>,
    #[serde(default)]
    pub gold: GoldConfig,
}

impl CdParams {
    pub fn new(k: usize, l: usize, tau_cd: f64) -> Self {
        Self {
            k,
            l,
            tau_cd,
            baseline_mi: None,
            gold: GoldConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.l {
            return Err(Error::domain(format!(
                "need 1 <= k < L, got k = {}, L = {}",
                self.k, self.l
            )));
        }
        if !(self.tau_cd >= 0.0) {
            return Err(Error::domain("tau_cd must be >= 0"));
        }
        self.gold.validate()
    }
}

/// Per-slot energy model at Dave, shared by every frame of a run.
struct Scene {
    l: usize,
    m: usize,
    n_tilde: f64,
    alpha: f64,
    /// Variance on the jammed band when the transmitted bit is 1.
    ab_on: f64,
    cd_gain: f64,
    level: [Vec<f64>; 2],
    p01: f64,
    p10: f64,
    gold: Vec<u8>,
}

impl Scene {
    fn new(cfg: &SystemConfig<f64>, c: &Constellation<f64>, p: &CdParams) -> Result<Self> {
        cfg.validate()?;
        validate_constellation(c, cfg)?;
        p.validate()?;
        let cross = crossover_probs(cfg, c.alpha)?;
        let gold = gold_bits(&p.gold, p.gold.period())?;
        Ok(Self {
            l: p.l,
            m: c.m(),
            n_tilde: cfg.noise(),
            alpha: c.alpha,
            ab_on: c.alpha + (1.0 - c.alpha) * (1.0 + cfg.partial_d),
            cd_gain: 1.0 + cfg.partial_d,
            level: [c.eps.clone(), c.eta.clone()],
            p01: cross.p01,
            p10: cross.p10,
            gold,
        })
    }

    fn energy(rng: &mut ChaCha8Rng, var: f64) -> f64 {
        let x: f64 = Exp1.sample(rng);
        var * x
    }

    /// Helper-band variance for Alice bit `i` relayed as Charlie symbol `j`.
    fn helper_var(&self, rng: &mut ChaCha8Rng, i: u8, j: usize) -> f64 {
        let flip = rng.random::<f64>() < if i == 0 { self.p01 } else { self.p10 };
        let i_hat = usize::from(i ^ u8::from(flip));
        (1.0 - self.alpha) * f64::from(i) + self.cd_gain * self.level[i_hat][j] + self.n_tilde
    }

    /// Before the attack Alice's OOK symbols (unit energy) sit on the jammed
    /// band and the helper band carries traffic independent of them.
    fn idle_frame(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let mut u = Vec::with_capacity(self.l);
        let mut v = Vec::with_capacity(self.l);
        for _ in 0..self.l {
            let x: u8 = rng.random_range(0..2);
            let i: u8 = rng.random_range(0..2);
            let j = rng.random_range(0..self.m);
            u.push(Self::energy(rng, f64::from(x) + self.n_tilde));
            let var = self.helper_var(rng, i, j);
            v.push(Self::energy(rng, var));
        }
        (u, v)
    }

    fn attack_frame(&self, rng: &mut ChaCha8Rng, mode: CdMode) -> (Vec<f64>, Vec<f64>) {
        let start = rng.random_range(0..self.gold.len());
        let mut u = Vec::with_capacity(self.l);
        let mut v = Vec::with_capacity(self.l);
        for t in 0..self.l {
            let i: u8 = rng.random_range(0..2);
            let j = rng.random_range(0..self.m);
            let b = match mode {
                CdMode::Gold => self.gold[(start + t) % self.gold.len()],
                CdMode::Repetition => i,
            };
            u.push(Self::energy(rng, f64::from(b) * self.ab_on + self.n_tilde));
            let var = self.helper_var(rng, i, j);
            v.push(Self::energy(rng, var));
        }
        (u, v)
    }
}

fn frame_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mi_over_frames<F>(frames: u64, k: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> (Vec<f64>, Vec<f64>) + Sync,
{
    (0..frames)
        .into_par_iter()
        .map(|t| {
            let (u, v) = f(t);
            ksg_mi(&u, &v, k)
        })
        .collect()
}

/// Long-run pre-attack MI estimate averaged over `frames` frames.
pub fn baseline_mi(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    p: &CdParams,
    frames: u64,
    seed: u64,
) -> Result<f64> {
    if frames == 0 {
        return Err(Error::domain("need at least one baseline frame"));
    }
    let scene = Scene::new(cfg, c, p)?;
    let mi = mi_over_frames(frames, p.k, |t| {
        scene.idle_frame(&mut frame_rng(seed, BASELINE_STREAM + t))
    })?;
    Ok(mi.iter().sum::<f64>() / frames as f64)
}

/// Per-frame MI estimates after the attack, one per trial frame.
pub fn attack_mi(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    p: &CdParams,
    mode: CdMode,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let scene = Scene::new(cfg, c, p)?;
    mi_over_frames(trials, p.k, |t| scene.attack_frame(&mut frame_rng(seed, t), mode))
}

/// `P_D,CD` for each threshold in `taus`, all evaluated on the same frames.
pub fn cd_curve(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    p: &CdParams,
    mode: CdMode,
    taus: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if taus.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::domain("thresholds must be >= 0"));
    }
    p.validate()?;
    let base = match p.baseline_mi {
        Some(b) => b,
        None => baseline_mi(cfg, c, p, BASELINE_FRAMES, seed)?,
    };
    let est = attack_mi(cfg, c, p, mode, trials, seed)?;
    Ok(taus
        .iter()
        .map(|&tau| {
            let hits = est.iter().filter(|&&e| (base - e).abs() >= tau).count();
            (tau, hits as f64 / trials as f64)
        })
        .collect())
}

/// `P_D,CD = Pr(|E[Ĩ_J] − Ĩ_CJ| ≥ τ_CD)` over `trials` attack frames.
pub fn cd_detect(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    p: &CdParams,
    mode: CdMode,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    Ok(cd_curve(cfg, c, p, mode, &[p.tau_cd], trials, seed)?[0].1)
}
