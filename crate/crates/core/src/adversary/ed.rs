//! Dave's energy detector on the jammed band.
//!
//! With `Ñ_o ≪ 1` a frame-average energy is `(1/L)·Σ b_l·A·X_l`, `b_l` fair
//! bits and `X_l ~ Exp(1)`: an atom of weight `2^−L` at zero plus a binomial
//! mixture of `Gamma(l, A/L)` densities. `A = 1` without the countermeasure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_binomial, ln_gamma, reg_gamma_pair};

use super::gold::{gold_bits, GoldConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdParams {
    /// Frame length in symbols.
    #[serde(rename = "L")]
    pub l: usize,
    pub tau: f64,
    /// Effective noise `Ñ_o = N_o + σ²_DD`.
    pub n_tilde: f64,
    /// Relative excess variance `∂` of the Charlie–Dave link.
    pub partial_d: f64,
}

impl EdParams {
    pub fn new(l: usize, tau: f64, n_tilde: f64, partial_d: f64) -> Self {
        Self {
            l,
            tau,
            n_tilde,
            partial_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::domain("frame length L must be at least 1"));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::domain(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !(self.n_tilde > 0.0 && self.n_tilde.is_finite()) {
            return Err(Error::domain("effective noise must be positive"));
        }
        if !(self.partial_d >= 0.0 && self.partial_d.is_finite()) {
            return Err(Error::domain("partial_d must be >= 0"));
        }
        Ok(())
    }

    /// Pre-attack expected per-symbol energy `Ñ_o + 1/2`.
    pub fn expected_energy(&self) -> f64 {
        self.n_tilde + 0.5
    }
}

/// `A = α + (1 − α)(1 + ∂)`.
pub fn energy_scale(alpha: f64, partial_d: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(partial_d >= 0.0) {
        return Err(Error::domain("partial_d must be >= 0"));
    }
    Ok(alpha + (1.0 - alpha) * (1.0 + partial_d))
}

fn check_la(l: usize, a: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::domain("frame length L must be at least 1"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("energy scale A must be positive"));
    }
    Ok(())
}

/// `ln(C(L,l) / 2^L)`.
fn ln_weight(l_tot: usize, l: usize) -> f64 {
    ln_binomial(l_tot, l) - l_tot as f64 * std::f64::consts::LN_2
}

/// Density of the continuous part of `V_L` (the atom at 0 is excluded).
pub fn pdf_vl(l_tot: usize, a: f64, x: f64) -> Result<f64> {
    check_la(l_tot, a)?;
    if !(x > 0.0) {
        return Err(Error::domain("energy must be positive"));
    }
    let rate = l_tot as f64 / a;
    let mut sum = 0.0;
    for l in 1..=l_tot {
        let lf = l as f64;
        let ln_term = ln_weight(l_tot, l) + lf * rate.ln() - rate * x + (lf - 1.0) * x.ln()
            - ln_gamma(lf)?;
        sum += ln_term.exp();
    }
    Ok(sum)
}

/// Density of the continuous part of `U_L` (`A = 1`).
pub fn pdf_ul(l_tot: usize, x: f64) -> Result<f64> {
    pdf_vl(l_tot, 1.0, x)
}

/// `Pr(V_L ≤ x)`, atom included; zero for `x < 0`.
pub fn cdf_vl(l_tot: usize, a: f64, x: f64) -> Result<f64> {
    Ok(lower_upper(l_tot, a, x)?.0)
}

/// `(Pr(V_L ≤ x), Pr(V_L > x))` evaluated without cancellation.
fn lower_upper(l_tot: usize, a: f64, x: f64) -> Result<(f64, f64)> {
    check_la(l_tot, a)?;
    if x.is_nan() {
        return Err(Error::domain("energy is NaN"));
    }
    if x < 0.0 {
        return Ok((0.0, 1.0));
    }
    // l = 0: the whole weight sits at zero, so it counts as "≤ x".
    let atom = ln_weight(l_tot, 0).exp();
    let mut lo = atom;
    let mut hi = 0.0;
    let z = l_tot as f64 * x / a;
    for l in 1..=l_tot {
        let w = ln_weight(l_tot, l).exp();
        let (p, q) = if z == 0.0 { (0.0, 1.0) } else { reg_gamma_pair(l as f64, z)? };
        lo += w * p;
        hi += w * q;
    }
    Ok((lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)))
}

/// `Pr(|V_L − E| > τ) = Pr(V_L > E + τ) + Pr(V_L ≤ E − τ)`.
fn outside(l_tot: usize, a: f64, e: f64, tau: f64) -> Result<f64> {
    let (_, upper) = lower_upper(l_tot, a, e + tau)?;
    let (lower, _) = lower_upper(l_tot, a, e - tau)?;
    Ok((upper + lower).clamp(0.0, 1.0))
}

/// False-alarm probability without the countermeasure.
pub fn ed_pfa(p: &EdParams) -> Result<f64> {
    p.validate()?;
    outside(p.l, 1.0, p.expected_energy(), p.tau)
}

/// Miss-detection probability under the Gold-scrambled countermeasure.
pub fn ed_pmd(p: &EdParams, alpha: f64) -> Result<f64> {
    p.validate()?;
    let a = energy_scale(alpha, p.partial_d)?;
    Ok((1.0 - outside(p.l, a, p.expected_energy(), p.tau)?).clamp(0.0, 1.0))
}

/// Source of the dummy bits under the countermeasure.
#[derive(Debug, Clone, PartialEq)]
pub enum Scrambler {
    /// Independent fair bits, the model behind the closed forms.
    Ideal,
    /// A Gold sequence read from a uniformly random phase per frame.
    Gold(GoldConfig),
}

/// What Dave observes on the jammed band.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    /// Alice's own OOK symbols (no countermeasure).
    Idle,
    /// Dummy bits sent jointly by Alice and Charlie at energies `α` and
    /// `1 − α`.
    Countermeasure { alpha: f64, scrambler: Scrambler },
}

const FRAMES_PER_BLOCK: u64 = 4_096;

/// Frame-average energies `(1/L)·Σ|r_D(l)|²` over `frames` simulated frames
/// with noise `Ñ_o`. Under the countermeasure each frame starts at a
/// uniformly random phase of the Gold sequence.
pub fn simulate_frame_energies(
    p: &EdParams,
    hyp: &Hypothesis,
    frames: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    p.validate()?;
    let bits = match hyp {
        Hypothesis::Idle => None,
        Hypothesis::Countermeasure { alpha, scrambler } => {
            energy_scale(*alpha, p.partial_d)?;
            match scrambler {
                Scrambler::Ideal => None,
                Scrambler::Gold(g) => Some(gold_bits(g, g.period())?),
            }
        }
    };
    let blocks = frames.div_ceil(FRAMES_PER_BLOCK);
    let out: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = FRAMES_PER_BLOCK.min(frames - b * FRAMES_PER_BLOCK);
            (0..n)
                .map(|_| frame_energy(&mut rng, p, hyp, bits.as_deref()))
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

fn frame_energy(rng: &mut ChaCha8Rng, p: &EdParams, hyp: &Hypothesis, bits: Option<&[u8]>) -> f64 {
    let mut total = 0.0;
    let start = bits.map_or(0, |b| rng.random_range(0..b.len()));
    let on_var = match hyp {
        Hypothesis::Idle => 1.0,
        Hypothesis::Countermeasure { alpha, .. } => alpha + (1.0 - alpha) * (1.0 + p.partial_d),
    };
    for l in 0..p.l {
        let bit = match bits {
            Some(b) => b[(start + l) % b.len()],
            None => u8::from(rng.random::<bool>()),
        };
        // Each received sample is complex Gaussian; its energy is
        // exponential with mean equal to the summed variances.
        let var = f64::from(bit) * on_var + p.n_tilde;
        let x: f64 = Exp1.sample(rng);
        total += var * x;
    }
    total / p.l as f64
}

/// Empirical `Pr(|E_D − E| > τ)` from simulated frames.
pub fn ed_monte_carlo(p: &EdParams, hyp: &Hypothesis, frames: u64, seed: u64) -> Result<f64> {
    let e = p.expected_energy();
    let v = simulate_frame_energies(p, hyp, frames, seed)?;
    let hits = v.iter().filter(|&&x| (x - e).abs() > p.tau).count();
    Ok(hits as f64 / v.len().max(1) as f64)
}
