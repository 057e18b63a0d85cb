//! Monte Carlo of the Alice → Charlie → Bob link over Rayleigh fast fading.
//!
//! Trials are split into blocks of [`BLOCK`] trials; block `b` draws from a
//! ChaCha8 stream keyed by `(seed, b)`, so results do not depend on how
//! rayon schedules the blocks. Every channel and noise sample is drawn
//! independently per trial and per antenna.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_sum_levels, index_from_pair, pair_from_index, validate_constellation, Constellation,
    SystemConfig,
};
use crate::relay::{charlie_threshold, crossover_probs, omegas, CrossoverProbs};
use crate::sep::thresholds;

/// Trials per RNG block.
pub const BLOCK: u64 = 10_000;
/// Stream offset used for the delay pre-roll so it never collides with a
/// trial block.
const PREROLL_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Jd,
    Jmap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayRates {
    pub p01: f64,
    pub p10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub joint_ser: f64,
    pub alice_ber: f64,
    pub charlie_ser: f64,
    pub p01: f64,
    pub p10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub decoder: Decoder,
    pub delay_n: usize,
    /// `P(ℓ̂ ≠ ℓ)`.
    pub joint_ser: f64,
    /// `P(î ≠ i)`.
    pub alice_ber: f64,
    /// `P(ĵ ≠ j)`.
    pub charlie_ser: f64,
    /// Measured relay crossover rates.
    pub relay_error_rate: RelayRates,
    pub std_err: StdErrors,
    pub seed: u64,
}

/// Draws one circularly-symmetric complex Gaussian of variance `var`
/// (two real normals of variance `var/2`).
#[inline]
pub fn draw_cgauss<R: Rng + ?Sized>(rng: &mut R, var: f64) -> (f64, f64) {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (sd * re, sd * im)
}

/// Gaussian-mixture ML decoder over the 2M pairs `(i, j)`.
#[derive(Debug, Clone)]
pub struct Jmap {
    n_b: f64,
    /// Per sum-level index: `(ln w_dominant, S, ln w_complementary, S̄)`.
    comps: Vec<(f64, f64, f64, f64)>,
}

impl Jmap {
    pub fn new(c: &Constellation<f64>, n_o: f64, n_b: usize, cross: &CrossoverProbs<f64>) -> Result<Self> {
        let levels = build_sum_levels(c, n_o)?;
        let m = c.m();
        let comps = (1..=2 * m)
            .map(|ell| {
                let (i, _) = pair_from_index(ell, m).expect("index in range");
                let (keep, flip) = if i == 0 {
                    (cross.p00, cross.p01)
                } else {
                    (cross.p11, cross.p10)
                };
                (keep.ln(), levels.s[ell - 1], flip.ln(), levels.s_bar[ell - 1])
            })
            .collect();
        Ok(Self {
            n_b: n_b as f64,
            comps,
        })
    }

    /// Sum-level index (1-based) maximizing the mixture likelihood of `energy`.
    pub fn decode_index(&self, energy: f64) -> usize {
        let ll = |s: f64| -self.n_b * s.ln() - energy / s;
        let mut best = (f64::NEG_INFINITY, 1usize);
        for (k, &(lw0, s0, lw1, s1)) in self.comps.iter().enumerate() {
            let a = lw0 + ll(s0);
            let b = lw1 + ll(s1);
            let hi = a.max(b);
            let v = if hi == f64::NEG_INFINITY {
                hi
            } else {
                hi + ((a - hi).exp() + (b - hi).exp()).ln()
            };
            if v > best.0 {
                best = (v, k + 1);
            }
        }
        best.1
    }
}

/// JMAP decision `(î, ĵ)` for a received energy `‖r_B‖²`.
pub fn jmap_decode(
    energy: f64,
    c: &Constellation<f64>,
    cross: &CrossoverProbs<f64>,
    cfg: &SystemConfig<f64>,
) -> Result<(u8, usize)> {
    let dec = Jmap::new(c, cfg.noise(), cfg.n_b, cross)?;
    pair_from_index(dec.decode_index(energy), c.m())
}

/// JD decision: index of the threshold interval containing `energy`.
#[inline]
pub fn jd_decode_index(energy: f64, rho: &[f64]) -> usize {
    rho.partition_point(|&r| r < energy) + 1
}

/// Everything a trial needs, precomputed once per run.
struct Setup {
    m: usize,
    n_c: usize,
    n_b: usize,
    n_o: f64,
    direct: f64,
    var_ac: f64,
    var_si: f64,
    nu: f64,
    rho: Vec<f64>,
    jmap: Jmap,
    /// `level[i][j-1]` = Charlie's energy for decided bit `i`, symbol `j`.
    level: [Vec<f64>; 2],
}

impl Setup {
    fn new(cfg: &SystemConfig<f64>, c: &Constellation<f64>) -> Result<Self> {
        cfg.validate()?;
        validate_constellation(c, cfg).or_else(|e| {
            // Designs printed with few decimals miss the energy constraint by
            // round-off only; anything else is rejected.
            let v = crate::model::constellation_violations_with(c, cfg, 1e-4);
            if v.is_empty() {
                Ok(())
            } else {
                Err(e)
            }
        })?;
        let n_o = cfg.noise();
        let levels = build_sum_levels(c, n_o)?;
        let (o0, o1) = omegas(cfg, c.alpha)?;
        let nu = charlie_threshold(o0, o1, cfg.n_c)?;
        let cross = crossover_probs(cfg, c.alpha)?;
        Ok(Self {
            m: c.m(),
            n_c: cfg.n_c,
            n_b: cfg.n_b,
            n_o,
            direct: 1.0 - c.alpha,
            var_ac: cfg.sigma2_ac,
            var_si: cfg.lambda() * (1.0 + c.alpha) / 2.0,
            nu,
            rho: thresholds(&levels.s, cfg.n_b)?,
            jmap: Jmap::new(c, n_o, cfg.n_b, &cross)?,
            level: [c.eps.clone(), c.eta.clone()],
        })
    }

    /// Charlie's per-antenna ML energy test on Alice's bit `i`.
    fn charlie_decides(&self, rng: &mut ChaCha8Rng, i: u8) -> u8 {
        let a = if i == 1 { self.direct.sqrt() } else { 0.0 };
        let si = self.var_si > 0.0;
        let mut energy = 0.0;
        for _ in 0..self.n_c {
            let h_ac = draw_cgauss(rng, self.var_ac);
            let h_cc = draw_cgauss(rng, if si { self.var_si } else { 0.0 });
            let n = draw_cgauss(rng, self.n_o);
            let re = h_ac.0 * a + h_cc.0 + n.0;
            let im = h_ac.1 * a + h_cc.1 + n.1;
            energy += re * re + im * im;
        }
        u8::from(energy > self.nu)
    }

    /// Bob's total received energy for Alice's current bit `i_now` and
    /// Charlie's transmit energy `e_c`.
    fn bob_energy(&self, rng: &mut ChaCha8Rng, i_now: u8, e_c: f64) -> f64 {
        let a = if i_now == 1 { self.direct.sqrt() } else { 0.0 };
        let b = e_c.sqrt();
        let mut energy = 0.0;
        for _ in 0..self.n_b {
            let h_ab = draw_cgauss(rng, 1.0);
            let h_cb = draw_cgauss(rng, 1.0);
            let n = draw_cgauss(rng, self.n_o);
            let re = h_ab.0 * a + h_cb.0 * b + n.0;
            let im = h_ab.1 * a + h_cb.1 * b + n.1;
            energy += re * re + im * im;
        }
        energy
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    trials: u64,
    joint: [u64; 2],
    alice: [u64; 2],
    charlie: [u64; 2],
    sent0: u64,
    flip01: u64,
    sent1: u64,
    flip10: u64,
}

impl Counts {
    fn add(mut self, o: Counts) -> Counts {
        self.trials += o.trials;
        for d in 0..2 {
            self.joint[d] += o.joint[d];
            self.alice[d] += o.alice[d];
            self.charlie[d] += o.charlie[d];
        }
        self.sent0 += o.sent0;
        self.flip01 += o.flip01;
        self.sent1 += o.sent1;
        self.flip10 += o.flip10;
        self
    }

    fn score(&mut self, setup: &Setup, energy: f64, i: u8, j: usize) {
        let jd = jd_decode_index(energy, &setup.rho);
        let jm = setup.jmap.decode_index(energy);
        for (d, ell) in [jd, jm].into_iter().enumerate() {
            let (ih, jh) = pair_from_index(ell, setup.m).expect("decoded index in range");
            let (ea, ec) = (ih != i, jh != j);
            self.alice[d] += u64::from(ea);
            self.charlie[d] += u64::from(ec);
            self.joint[d] += u64::from(ea || ec);
        }
    }

    fn relay(&mut self, i: u8, i_hat: u8) {
        if i == 0 {
            self.sent0 += 1;
            self.flip01 += u64::from(i_hat == 1);
        } else {
            self.sent1 += 1;
            self.flip10 += u64::from(i_hat == 0);
        }
    }

    fn report(&self, decoder: Decoder, seed: u64, delay_n: usize) -> SimReport {
        let d = match decoder {
            Decoder::Jd => 0,
            Decoder::Jmap => 1,
        };
        let n = self.trials as f64;
        let rate = |k: u64, n: f64| if n > 0.0 { k as f64 / n } else { 0.0 };
        let se = |p: f64, n: f64| if n > 0.0 { (p * (1.0 - p) / n).sqrt() } else { 0.0 };
        let joint = rate(self.joint[d], n);
        let alice = rate(self.alice[d], n);
        let charlie = rate(self.charlie[d], n);
        let p01 = rate(self.flip01, self.sent0 as f64);
        let p10 = rate(self.flip10, self.sent1 as f64);
        SimReport {
            trials: self.trials,
            decoder,
            delay_n,
            joint_ser: joint,
            alice_ber: alice,
            charlie_ser: charlie,
            relay_error_rate: RelayRates { p01, p10 },
            std_err: StdErrors {
                joint_ser: se(joint, n),
                alice_ber: se(alice, n),
                charlie_ser: se(charlie, n),
                p01: se(p01, self.sent0 as f64),
                p10: se(p10, self.sent1 as f64),
            },
            seed,
        }
    }
}

fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn block_sizes(trials: u64) -> Vec<(u64, u64)> {
    let blocks = trials.div_ceil(BLOCK);
    (0..blocks)
        .map(|b| (b, BLOCK.min(trials - b * BLOCK)))
        .collect()
}

fn run_blocks<F>(trials: u64, f: F) -> Counts
where
    F: Fn(u64, u64) -> Counts + Sync,
{
    block_sizes(trials)
        .into_par_iter()
        .map(|(b, n)| f(b, n))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Counts::default(), Counts::add)
}

fn zero_delay_counts(setup: &Setup, trials: u64, seed: u64) -> Counts {
    run_blocks(trials, |b, n| {
        let mut rng = block_rng(seed, b);
        let mut k = Counts::default();
        for _ in 0..n {
            let i: u8 = rng.random_range(0..2);
            let j: usize = rng.random_range(1..=setup.m);
            let i_hat = setup.charlie_decides(&mut rng, i);
            let e_c = setup.level[usize::from(i_hat)][j - 1];
            let energy = setup.bob_energy(&mut rng, i, e_c);
            k.trials += 1;
            k.relay(i, i_hat);
            k.score(setup, energy, i, j);
        }
        k
    })
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    Ok(())
}

/// Simulates `trials` independent slots and decodes with `decoder`.
/// `cfg.delay_n` is ignored here; see [`simulate_delayed`].
pub fn simulate(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    trials: u64,
    seed: u64,
    decoder: Decoder,
) -> Result<SimReport> {
    check_trials(trials)?;
    let setup = Setup::new(cfg, c)?;
    Ok(zero_delay_counts(&setup, trials, seed).report(decoder, seed, 0))
}

/// Runs both decoders on the same received energies; returns `(JD, JMAP)`.
pub fn simulate_both(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    trials: u64,
    seed: u64,
) -> Result<(SimReport, SimReport)> {
    check_trials(trials)?;
    let setup = Setup::new(cfg, c)?;
    let k = zero_delay_counts(&setup, trials, seed);
    Ok((k.report(Decoder::Jd, seed, 0), k.report(Decoder::Jmap, seed, 0)))
}

/// Imperfect fast-forwarding: Charlie's slot-`l` energy carries its decision
/// on Alice's slot `l − n` bit, while Alice's slot-`l` bit still reaches Bob
/// on the direct link. Bob's JD decoder (delay-free thresholds) targets
/// `(i(l − n), j(l))`. With `cfg.delay_n = 0` this is exactly [`simulate`].
pub fn simulate_delayed(
    cfg: &SystemConfig<f64>,
    c: &Constellation<f64>,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    check_trials(trials)?;
    let delay = cfg.delay_n;
    if delay == 0 {
        return simulate(cfg, c, trials, seed, Decoder::Jd);
    }
    let setup = Setup::new(cfg, c)?;
    let k = run_blocks(trials, |b, n| {
        // Each block starts with `delay` slots of history from its own stream.
        let mut pre = block_rng(seed, PREROLL_STREAM + b);
        let mut history: std::collections::VecDeque<(u8, u8)> = (0..delay)
            .map(|_| {
                let i: u8 = pre.random_range(0..2);
                (i, setup.charlie_decides(&mut pre, i))
            })
            .collect();
        let mut rng = block_rng(seed, b);
        let mut k = Counts::default();
        for _ in 0..n {
            let i: u8 = rng.random_range(0..2);
            let j: usize = rng.random_range(1..=setup.m);
            let i_hat = setup.charlie_decides(&mut rng, i);
            history.push_back((i, i_hat));
            let (i_old, i_old_hat) = history.pop_front().expect("history holds delay slots");
            let e_c = setup.level[usize::from(i_old_hat)][j - 1];
            let energy = setup.bob_energy(&mut rng, i, e_c);
            k.trials += 1;
            k.relay(i, i_hat);
            k.score(&setup, energy, i_old, j);
        }
        k
    });
    Ok(k.report(Decoder::Jd, seed, delay))
}

/// Index of `(i, j)` — re-exported for callers mapping decisions back.
pub fn level_index(i: u8, j: usize, m: usize) -> Result<usize> {
    index_from_pair(i, j, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row2() -> (SystemConfig<f64>, Constellation<f64>) {
        (
            SystemConfig::new(1, 8, 2, 14.0),
            Constellation::from_level_order(&[0.0, 1e-6, 0.5554, 3.0750], 0.8152).unwrap(),
        )
    }

    #[test]
    fn reproducible_and_block_independent() {
        let (cfg, c) = row2();
        let a = simulate(&cfg, &c, 25_000, 7, Decoder::Jd).unwrap();
        let b = simulate(&cfg, &c, 25_000, 7, Decoder::Jd).unwrap();
        assert_eq!(a, b);
        let other = simulate(&cfg, &c, 25_000, 8, Decoder::Jd).unwrap();
        assert_ne!(a.joint_ser, other.joint_ser);
    }

    #[test]
    fn delay_zero_matches_simulate() {
        let (cfg, c) = row2();
        let a = simulate(&cfg, &c, 12_000, 3, Decoder::Jd).unwrap();
        let b = simulate_delayed(&cfg, &c, 12_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn jd_decode_interval_edges() {
        let rho = [1.0, 2.0, 3.0];
        assert_eq!(jd_decode_index(0.5, &rho), 1);
        assert_eq!(jd_decode_index(1.0, &rho), 1);
        assert_eq!(jd_decode_index(1.5, &rho), 2);
        assert_eq!(jd_decode_index(9.0, &rho), 4);
    }

    #[test]
    fn jmap_with_perfect_relay_equals_jd() {
        let (cfg, c) = row2();
        let cross = CrossoverProbs::perfect();
        let jm = Jmap::new(&c, cfg.noise(), cfg.n_b, &cross).unwrap();
        let levels = build_sum_levels(&c, cfg.noise()).unwrap();
        let rho = thresholds(&levels.s, cfg.n_b).unwrap();
        for k in 0..4000 {
            let e = 1e-3 * 1.004f64.powi(k);
            assert_eq!(jm.decode_index(e), jd_decode_index(e, &rho), "energy {e}");
        }
    }

    #[test]
    fn rejects_zero_trials() {
        let (cfg, c) = row2();
        assert!(simulate(&cfg, &c, 0, 1, Decoder::Jd).is_err());
    }
}
