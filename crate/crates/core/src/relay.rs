//! Charlie's energy detector for Alice's OOK symbol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::numerics::reg_gamma_pair;
use crate::scalar::Scalar;

/// Charlie's decision-error model. `p01` is the probability of deciding 1
/// when Alice sent 0, `p10` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CrossoverProbs<T = f64> {
    pub p01: T,
    pub p10: T,
    pub p00: T,
    pub p11: T,
}

impl<T: Scalar> CrossoverProbs<T> {
    pub fn new(p01: T, p10: T) -> Self {
        let p01 = p01.clamp_prob();
        let p10 = p10.clamp_prob();
        Self {
            p01,
            p10,
            p00: T::one() - p01,
            p11: T::one() - p10,
        }
    }

    /// Error-free relaying.
    pub fn perfect() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Average of the two crossover probabilities (equal priors).
    pub fn average_error(&self) -> T {
        (self.p01 + self.p10) / T::lit(2.0)
    }
}

/// Per-antenna received energies at Charlie when Alice sends 0 (`Ω0`) and 1 (`Ω1`).
pub fn omegas<T: Scalar>(cfg: &SystemConfig<T>, alpha: T) -> Result<(T, T)> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let omega0 = cfg.lambda() * (T::one() + alpha) / T::lit(2.0) + cfg.noise();
    let omega1 = omega0 + cfg.sigma2_ac * (T::one() - alpha);
    Ok((omega0, omega1))
}

/// ML threshold `ν = N_C Ω0Ω1/(Ω0−Ω1) ln(Ω0/Ω1)` on Charlie's total energy.
pub fn charlie_threshold<T: Scalar>(omega0: T, omega1: T, n_c: usize) -> Result<T> {
    Ok(scaled_thresholds(omega0, omega1, n_c)?.1 * omega1)
}

/// Returns `(ν/Ω0, ν/Ω1)` without forming `ν` first, which keeps full
/// precision when `Ω1/Ω0` is close to 1.
pub fn scaled_thresholds<T: Scalar>(omega0: T, omega1: T, n_c: usize) -> Result<(T, T)> {
    if n_c == 0 {
        return Err(Error::domain("N_C must be at least 1"));
    }
    if !(omega0 > T::zero()) || !omega0.is_finite() || !omega1.is_finite() {
        return Err(Error::domain("omegas must be finite and positive"));
    }
    if omega1 == omega0 {
        return Err(Error::Degenerate("Omega0 == Omega1".into()));
    }
    if omega1 < omega0 {
        return Err(Error::domain("Omega1 must exceed Omega0"));
    }
    let theta = (omega1 - omega0) / omega0;
    let shape = T::from_count(n_c);
    let over_omega1 = shape * theta.ln_1p() / theta;
    Ok((over_omega1 * (T::one() + theta), over_omega1))
}

/// Crossover probabilities `P01 = Q(N_C, ν/Ω0)` and `P10 = P(N_C, ν/Ω1)`.
pub fn crossover_probs<T: Scalar>(cfg: &SystemConfig<T>, alpha: T) -> Result<CrossoverProbs<T>> {
    let (omega0, omega1) = omegas(cfg, alpha)?;
    let (x0, x1) = scaled_thresholds(omega0, omega1, cfg.n_c)?;
    let shape = T::from_count(cfg.n_c);
    let (_, p01) = reg_gamma_pair(shape, x0)?;
    let (p10, _) = reg_gamma_pair(shape, x1)?;
    Ok(CrossoverProbs::new(p01, p10))
}
