//! Closed-form symbol-error probability at Bob under the joint dominant (JD)
//! threshold decoder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{alice_bit, build_sum_levels, Constellation, SumLevels, SystemConfig};
use crate::numerics::reg_gamma_pair;
use crate::relay::{crossover_probs, CrossoverProbs};
use crate::scalar::Scalar;

/// Everything the closed-form evaluation produces for one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SepBreakdown<T = f64> {
    pub p_e: T,
    pub p_e_prime: T,
    pub p_e_approx: T,
    /// `(P_{e,S_ℓ}, P_{e,S̄_ℓ})` for `ℓ = 1..2M`.
    pub per_level: Vec<(T, T)>,
    /// `ρ_{ℓ,ℓ+1}` for `ℓ = 1..2M−1`.
    pub thresholds: Vec<T>,
    pub cross: CrossoverProbs<T>,
}

/// Energy threshold between two Gamma(N_B) hypotheses with scales `s_a`, `s_b`.
///
/// Evaluated as `N_B·s_b·ln(1+κ)/κ` with `κ = (s_b − s_a)/s_a`, which is the
/// same expression as `N_B s_a s_b/(s_b−s_a) ln(s_b/s_a)` but does not lose
/// digits when the two levels nearly coincide.
pub fn pairwise_threshold<T: Scalar>(s_a: T, s_b: T, n_b: usize) -> Result<T> {
    if n_b == 0 {
        return Err(Error::domain("N_B must be at least 1"));
    }
    if !(s_a > T::zero() && s_b > T::zero()) || !s_a.is_finite() || !s_b.is_finite() {
        return Err(Error::domain("threshold levels must be finite and positive"));
    }
    if s_a == s_b {
        return Err(Error::Degenerate("equal sum levels".into()));
    }
    let kappa = (s_b - s_a) / s_a;
    Ok(T::from_count(n_b) * s_b * kappa.ln_1p() / kappa)
}

/// Thresholds between consecutive dominant levels.
pub fn thresholds<T: Scalar>(s: &[T], n_b: usize) -> Result<Vec<T>> {
    s.windows(2)
        .map(|w| pairwise_threshold(w[0], w[1], n_b))
        .collect()
}

/// Probability that an energy drawn with per-antenna scale `scale` falls
/// outside decision interval `ell` (0-based) of the threshold vector.
pub fn interval_error<T: Scalar>(scale: T, ell: usize, rho: &[T], n_b: usize) -> Result<T> {
    let shape = T::from_count(n_b);
    let mut err = T::zero();
    if ell > 0 {
        err = err + reg_gamma_pair(shape, rho[ell - 1] / scale)?.0;
    }
    if ell < rho.len() {
        err = err + reg_gamma_pair(shape, rho[ell] / scale)?.1;
    }
    Ok(err.clamp_prob())
}

/// Per-level error terms; both sets use thresholds from the dominant set.
pub fn per_level_errors<T: Scalar>(levels: &SumLevels<T>, n_b: usize) -> Result<Vec<(T, T)>> {
    let rho = thresholds(&levels.s, n_b)?;
    per_level_with(levels, &rho, n_b)
}

fn per_level_with<T: Scalar>(levels: &SumLevels<T>, rho: &[T], n_b: usize) -> Result<Vec<(T, T)>> {
    (0..levels.len())
        .map(|ell| {
            Ok((
                interval_error(levels.s[ell], ell, rho, n_b)?,
                interval_error(levels.s_bar[ell], ell, rho, n_b)?,
            ))
        })
        .collect()
}

/// Dominant-set error average; the `N_C → ∞` approximation.
pub fn sep_approx<T: Scalar>(levels: &SumLevels<T>, n_b: usize) -> Result<T> {
    let rho = thresholds(&levels.s, n_b)?;
    let mut total = T::zero();
    for (ell, &s) in levels.s.iter().enumerate() {
        total = total + interval_error(s, ell, &rho, n_b)?;
    }
    Ok((total / T::from_count(levels.len())).clamp_prob())
}

/// Combines levels and crossover probabilities into the full breakdown.
pub fn sep_from_parts<T: Scalar>(
    levels: &SumLevels<T>,
    cross: CrossoverProbs<T>,
    n_b: usize,
) -> Result<SepBreakdown<T>> {
    let rho = thresholds(&levels.s, n_b)?;
    let per_level = per_level_with(levels, &rho, n_b)?;
    let two_m = T::from_count(levels.len());
    let m = T::from_count(levels.m());
    let (mut exact, mut dominant_weighted, mut dominant) = (T::zero(), T::zero(), T::zero());
    for (k, &(pe_s, pe_sb)) in per_level.iter().enumerate() {
        let (keep, flip) = if alice_bit(k + 1) == 0 {
            (cross.p00, cross.p01)
        } else {
            (cross.p11, cross.p10)
        };
        exact = exact + keep * pe_s + flip * pe_sb;
        dominant_weighted = dominant_weighted + keep * pe_s;
        dominant = dominant + pe_s;
    }
    let upper = (dominant_weighted + m * (cross.p01 + cross.p10)) / two_m;
    Ok(SepBreakdown {
        p_e: (exact / two_m).clamp_prob(),
        p_e_prime: upper.clamp_prob(),
        p_e_approx: (dominant / two_m).clamp_prob(),
        per_level,
        thresholds: rho,
        cross,
    })
}

/// Exact JD symbol-error probability with Charlie's decision errors.
pub fn sep_exact<T: Scalar>(c: &Constellation<T>, cfg: &SystemConfig<T>) -> Result<SepBreakdown<T>> {
    cfg.validate()?;
    if c.m() != cfg.m {
        return Err(Error::LengthMismatch {
            left: c.m(),
            right: cfg.m,
        });
    }
    let levels = build_sum_levels(c, cfg.noise())?;
    let cross = crossover_probs(cfg, c.alpha)?;
    sep_from_parts(&levels, cross, cfg.n_b)
}

/// Upper bound that replaces every complementary error term by 1.
pub fn sep_upper<T: Scalar>(c: &Constellation<T>, cfg: &SystemConfig<T>) -> Result<T> {
    Ok(sep_exact(c, cfg)?.p_e_prime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_unit_log_ratio_and_symmetry() {
        let e = std::f64::consts::E;
        let r: f64 = pairwise_threshold(0.2, 0.2 * e, 1).unwrap();
        assert!((r - 0.2 * e / (e - 1.0)).abs() < 1e-14);
        let a: f64 = pairwise_threshold(0.1, 0.4, 8).unwrap();
        let b = pairwise_threshold(0.4, 0.1, 8).unwrap();
        assert!((a - b).abs() < 1e-13);
        assert!(a > 0.8 && a < 3.2);
        assert!(matches!(pairwise_threshold(0.3, 0.3, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_level_terms_are_one_sided() {
        let lv = SumLevels::from_dominant(vec![0.1, 1.1]).unwrap();
        let pe = per_level_errors(&lv, 4).unwrap();
        let rho = pairwise_threshold(0.1, 1.1, 4).unwrap();
        let (p, _) = reg_gamma_pair(4.0, rho / 1.1).unwrap();
        let (_, q) = reg_gamma_pair(4.0, rho / 0.1).unwrap();
        assert_eq!(pe[0].0, q);
        assert_eq!(pe[1].0, p);
    }

    #[test]
    fn perfect_relay_collapses_to_dominant_average() {
        let c = Constellation::from_level_order(&[0.0, 1e-6, 0.5554, 3.0750], 0.8152).unwrap();
        let levels = build_sum_levels(&c, 10f64.powf(-1.4)).unwrap();
        let b = sep_from_parts(&levels, CrossoverProbs::perfect(), 8).unwrap();
        assert!((b.p_e - b.p_e_approx).abs() < 1e-15);
        assert!((b.p_e_prime - b.p_e_approx).abs() < 1e-15);
    }

    #[test]
    fn exponential_two_level_case() {
        let n_o: f64 = 0.05;
        let lv = SumLevels::from_dominant(vec![n_o, 1.0 + n_o]).unwrap();
        let rho = n_o * (1.0 + n_o) / 1.0 * ((1.0 + n_o) / n_o).ln();
        let want = 0.5 * ((-rho / n_o).exp() + 1.0 - (-rho / (1.0 + n_o)).exp());
        assert!((sep_approx(&lv, 1).unwrap() - want).abs() < 1e-14);
    }
}
