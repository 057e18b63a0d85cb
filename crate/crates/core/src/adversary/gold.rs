//! Gold sequences from a preferred pair of Fibonacci LFSRs.
//!
//! A tap mask holds the low-order coefficients of the characteristic
//! polynomial `x^d + Σ c_k x^k`: bit `k` set means `c_k = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldConfig {
    pub register_degree: u32,
    pub taps_a: u32,
    pub taps_b: u32,
    pub seed_a: u32,
    pub seed_b: u32,
}

impl Default for GoldConfig {
    /// Degree-10 pair `x^10 + x^3 + 1`, `x^10 + x^9 + x^8 + x^6 + x^3 + x^2 + 1`.
    fn default() -> Self {
        Self {
            register_degree: 10,
            taps_a: 1 | 1 << 3,
            taps_b: 1 | 1 << 2 | 1 << 3 | 1 << 6 | 1 << 8 | 1 << 9,
            seed_a: 1,
            seed_b: 2,
        }
    }
}

impl GoldConfig {
    /// Degree-5 pair `x^5 + x^2 + 1`, `x^5 + x^4 + x^3 + x^2 + 1`.
    pub fn degree5() -> Self {
        Self {
            register_degree: 5,
            taps_a: 0b00101,
            taps_b: 0b11101,
            seed_a: 1,
            seed_b: 1,
        }
    }

    /// Degree-23 pair `x^23 + x^5 + 1` and its decimation by 3,
    /// `x^23 + x^17 + x^11 + x^5 + 1`. Autocorrelation sidelobes are about
    /// `2^−11`, so short windows behave like independent fair bits.
    pub fn degree23() -> Self {
        Self {
            register_degree: 23,
            taps_a: 1 | 1 << 5,
            taps_b: 1 | 1 << 5 | 1 << 11 | 1 << 17,
            seed_a: 1,
            seed_b: 1,
        }
    }

    pub fn period(&self) -> usize {
        (1usize << self.register_degree) - 1
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.register_degree;
        if !(2..=24).contains(&d) {
            return Err(Error::InvalidConfig(format!("register degree {d} outside 2..=24")));
        }
        let full = (1u32 << d) - 1;
        for (name, taps, seed) in [("a", self.taps_a, self.seed_a), ("b", self.taps_b, self.seed_b)] {
            if seed & full == 0 || seed > full {
                return Err(Error::InvalidConfig(format!(
                    "seed_{name} must be a nonzero {d}-bit state"
                )));
            }
            if taps & 1 == 0 || taps > full {
                return Err(Error::InvalidConfig(format!(
                    "taps_{name} must include the constant term and fit in {d} bits"
                )));
            }
            if !is_maximal(d, taps) {
                return Err(Error::InvalidConfig(format!(
                    "taps_{name} = {taps:#b} does not generate a maximal-length sequence"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Lfsr {
    state: u32,
    taps: u32,
    top: u32,
}

impl Lfsr {
    fn new(degree: u32, taps: u32, seed: u32) -> Self {
        Self {
            state: seed,
            taps,
            top: degree - 1,
        }
    }

    #[inline]
    fn step(&mut self) -> u8 {
        let out = (self.state & 1) as u8;
        let fb = (self.state & self.taps).count_ones() & 1;
        self.state = (self.state >> 1) | (fb << self.top);
        out
    }
}

fn is_maximal(degree: u32, taps: u32) -> bool {
    let mut r = Lfsr::new(degree, taps, 1);
    let period = (1u64 << degree) - 1;
    for n in 1..=period {
        r.step();
        if r.state == 1 {
            return n == period;
        }
    }
    false
}

/// One m-sequence of length `n` from a single register.
pub fn m_sequence(degree: u32, taps: u32, seed: u32, n: usize) -> Vec<u8> {
    let mut r = Lfsr::new(degree, taps, seed);
    (0..n).map(|_| r.step()).collect()
}

/// First `n` bits of the Gold sequence (XOR of the pair).
pub fn gold_bits(g: &GoldConfig, n: usize) -> Result<Vec<u8>> {
    g.validate()?;
    let mut a = Lfsr::new(g.register_degree, g.taps_a, g.seed_a);
    let mut b = Lfsr::new(g.register_degree, g.taps_b, g.seed_b);
    Ok((0..n).map(|_| a.step() ^ b.step()).collect())
}

/// Periodic cross-correlation of two ±1-mapped bit sequences of equal
/// length, for every cyclic shift.
pub fn periodic_cross_correlation(x: &[u8], y: &[u8]) -> Result<Vec<i64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    let pm = |b: u8| if b == 0 { 1i64 } else { -1 };
    Ok((0..n)
        .map(|s| (0..n).map(|k| pm(x[k]) * pm(y[(k + s) % n])).sum())
        .collect())
}
