//! System parameters, constellations, the `ℓ ↔ (i, j)` index map and the
//! received sum-energy levels at Bob.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Physical and link parameters.
///
/// Field names on the wire follow the usual symbols (`N_C`, `sigma2_AC`, ...).
/// `lambda_db = null` means perfect self-interference cancellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct SystemConfig<T = f64> {
    #[serde(rename = "N_C")]
    pub n_c: usize,
    #[serde(rename = "N_B")]
    pub n_b: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub snr_db: T,
    #[serde(default = "default_lambda_db")]
    pub lambda_db: Option<T>,
    #[serde(rename = "sigma2_AC", default = "default_sigma2_ac")]
    pub sigma2_ac: T,
    #[serde(rename = "sigma2_AB", default = "T::one")]
    pub sigma2_ab: T,
    #[serde(rename = "sigma2_CB", default = "T::one")]
    pub sigma2_cb: T,
    #[serde(default = "T::zero")]
    pub partial_d: T,
    #[serde(default)]
    pub delay_n: usize,
}

fn default_lambda_db<T: Scalar>() -> Option<T> {
    Some(T::lit(-50.0))
}

fn default_sigma2_ac<T: Scalar>() -> T {
    T::lit(4.0)
}

impl<T: Scalar> Default for SystemConfig<T> {
    fn default() -> Self {
        Self {
            n_c: 1,
            n_b: 8,
            m: 2,
            snr_db: T::lit(14.0),
            lambda_db: default_lambda_db(),
            sigma2_ac: default_sigma2_ac(),
            sigma2_ab: T::one(),
            sigma2_cb: T::one(),
            partial_d: T::zero(),
            delay_n: 0,
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    pub fn new(n_c: usize, n_b: usize, m: usize, snr_db: T) -> Self {
        Self {
            n_c,
            n_b,
            m,
            snr_db,
            ..Self::default()
        }
    }

    /// Noise energy `N_o = 10^(−SNR/10)`.
    pub fn noise(&self) -> T {
        noise_from_snr_db(self.snr_db)
    }

    /// Residual self-interference as a linear ratio (0 for perfect SIC).
    pub fn lambda(&self) -> T {
        match self.lambda_db {
            Some(db) => T::lit(10.0).powf(db / T::lit(10.0)),
            None => T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_c == 0 {
            return bad("N_C must be at least 1".into());
        }
        if self.n_b == 0 {
            return bad("N_B must be at least 1".into());
        }
        if self.m < 2 || !self.m.is_power_of_two() {
            return bad(format!("M must be a power of two >= 2, got {}", self.m));
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite".into());
        }
        if let Some(db) = self.lambda_db {
            if db.is_nan() || db == T::infinity() {
                return bad("lambda_db must be finite or null".into());
            }
        }
        if !(self.sigma2_ac > T::zero()) || !self.sigma2_ac.is_finite() {
            return bad("sigma2_AC must be positive".into());
        }
        if self.sigma2_ab != T::one() || self.sigma2_cb != T::one() {
            return bad("sigma2_AB and sigma2_CB are normalized to 1".into());
        }
        if !(self.sigma2_ac > self.sigma2_ab) {
            return bad("sigma2_AC must exceed sigma2_AB".into());
        }
        if !(self.partial_d >= T::zero()) || !self.partial_d.is_finite() {
            return bad("partial_d must be finite and >= 0".into());
        }
        let n_o = self.noise();
        if !(n_o > T::zero()) || !n_o.is_finite() {
            return bad("snr_db gives a non-positive noise energy".into());
        }
        Ok(())
    }
}

pub fn noise_from_snr_db<T: Scalar>(snr_db: T) -> T {
    T::lit(10.0).powf(-snr_db / T::lit(10.0))
}

/// Charlie's energy levels (`ε_j` when Alice sent 0, `η_j` when she sent 1)
/// and Alice's split factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct Constellation<T = f64> {
    pub eps: Vec<T>,
    pub eta: Vec<T>,
    pub alpha: T,
}

impl<T: Scalar> Constellation<T> {
    pub fn new(eps: Vec<T>, eta: Vec<T>, alpha: T) -> Result<Self> {
        if eps.len() != eta.len() {
            return Err(Error::LengthMismatch {
                left: eps.len(),
                right: eta.len(),
            });
        }
        Ok(Self { eps, eta, alpha })
    }

    /// Builds a constellation from energies listed in sum-level order, i.e.
    /// `levels[ℓ−1]` is `ε_j` when `ℓ` maps to `(0, j)` and `η_j` otherwise.
    pub fn from_level_order(levels: &[T], alpha: T) -> Result<Self> {
        let two_m = levels.len();
        if two_m < 4 || !two_m.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "need an even number (>= 4) of energies, got {two_m}"
            )));
        }
        let m = two_m / 2;
        let mut eps = vec![T::zero(); m];
        let mut eta = vec![T::zero(); m];
        for (k, &v) in levels.iter().enumerate() {
            let (i, j) = pair_from_index(k + 1, m)?;
            if i == 0 {
                eps[j - 1] = v;
            } else {
                eta[j - 1] = v;
            }
        }
        Ok(Self { eps, eta, alpha })
    }

    /// Inverse of [`Constellation::from_level_order`].
    pub fn level_order(&self) -> Vec<T> {
        let m = self.m();
        (1..=2 * m)
            .map(|ell| match pair_from_index(ell, m) {
                Ok((0, j)) => self.eps[j - 1],
                Ok((_, j)) => self.eta[j - 1],
                Err(_) => T::nan(),
            })
            .collect()
    }

    pub fn m(&self) -> usize {
        self.eps.len()
    }

    /// Charlie's average transmit energy `(1/2M) Σ (ε_j + η_j)`.
    pub fn mean_energy(&self) -> T {
        let total = self
            .eps
            .iter()
            .chain(self.eta.iter())
            .fold(T::zero(), |acc, &v| acc + v);
        total / T::from_count(2 * self.m().max(1))
    }
}

/// Dominant (`S`) and complementary (`S̄`) received-energy hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SumLevels<T = f64> {
    #[serde(rename = "S")]
    pub s: Vec<T>,
    #[serde(rename = "S_bar")]
    pub s_bar: Vec<T>,
}

impl<T: Scalar> SumLevels<T> {
    /// Validates a dominant set directly (used by the sum-level optimizer,
    /// which works without a constellation). `S̄` is set equal to `S`.
    pub fn from_dominant(s: Vec<T>) -> Result<Self> {
        check_increasing(&s)?;
        Ok(Self {
            s_bar: s.clone(),
            s,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn m(&self) -> usize {
        self.s.len() / 2
    }
}

fn check_increasing<T: Scalar>(s: &[T]) -> Result<()> {
    if s.len() < 2 || !s.len().is_multiple_of(2) {
        return Err(Error::domain(format!(
            "sum-level set must have an even length >= 2, got {}",
            s.len()
        )));
    }
    if let Some(k) = s.iter().position(|v| !v.is_finite() || *v <= T::zero()) {
        return Err(Error::domain(format!("sum level S_{} is not positive", k + 1)));
    }
    for ell in 1..s.len() {
        if !(s[ell] > s[ell - 1]) {
            return Err(Error::Ordering { ell: ell + 1 });
        }
    }
    Ok(())
}

/// Maps Alice's bit `i` and Charlie's symbol `j` (1-based) to the sum-level
/// index `ℓ` (1-based).
pub fn index_from_pair(i: u8, j: usize, m: usize) -> Result<usize> {
    if i > 1 || j == 0 || j > m {
        return Err(Error::domain(format!(
            "pair (i={i}, j={j}) outside {{0,1}} x 1..{m}"
        )));
    }
    // Closed forms: i=0 → (4j + (−1)^j − 1)/2, i=1 → (4j − (−1)^j − 1)/2.
    let ell = if j.is_multiple_of(2) {
        if i == 0 {
            2 * j
        } else {
            2 * j - 1
        }
    } else if i == 0 {
        2 * j - 1
    } else {
        2 * j
    };
    Ok(ell)
}

/// Inverse of [`index_from_pair`].
pub fn pair_from_index(ell: usize, m: usize) -> Result<(u8, usize)> {
    if ell == 0 || ell > 2 * m {
        return Err(Error::domain(format!("index {ell} outside 1..{}", 2 * m)));
    }
    let j = ell.div_ceil(2);
    let i = if ell % 4 <= 1 { 0 } else { 1 };
    Ok((i, j))
}

/// Alice's bit at sum level `ℓ`; positions with `ℓ mod 4 ∈ {0, 1}` carry `i = 0`.
pub fn alice_bit(ell: usize) -> u8 {
    if ell % 4 <= 1 {
        0
    } else {
        1
    }
}

/// Places `ε_j + N_o` (i = 0) and `1 − α + η_j + N_o` (i = 1) at their
/// sum-level positions; the complementary set swaps `ε` and `η`.
pub fn build_sum_levels<T: Scalar>(c: &Constellation<T>, n_o: T) -> Result<SumLevels<T>> {
    let m = c.m();
    if m < 2 || c.eta.len() != m {
        return Err(Error::LengthMismatch {
            left: c.eps.len(),
            right: c.eta.len(),
        });
    }
    if !(n_o > T::zero()) {
        return Err(Error::domain("noise energy must be positive"));
    }
    let direct = T::one() - c.alpha;
    let mut s = vec![T::zero(); 2 * m];
    let mut s_bar = vec![T::zero(); 2 * m];
    for j in 1..=m {
        let (e, h) = (c.eps[j - 1], c.eta[j - 1]);
        let l0 = index_from_pair(0, j, m)? - 1;
        let l1 = index_from_pair(1, j, m)? - 1;
        s[l0] = e + n_o;
        s_bar[l0] = h + n_o;
        s[l1] = direct + h + n_o;
        s_bar[l1] = direct + e + n_o;
    }
    check_increasing(&s)?;
    Ok(SumLevels { s, s_bar })
}

/// One violated constellation constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SizeMismatch { eps: usize, eta: usize, m: usize },
    NonFinite,
    AlphaRange { alpha: f64 },
    Negative { name: &'static str, j: usize, value: f64 },
    EpsNotIncreasing { j: usize },
    EtaNotIncreasing { j: usize },
    /// `ε_j < η_j` is required for odd `j`.
    OddPairOrder { j: usize },
    /// `ε_j > η_j` is required for even `j`.
    EvenPairOrder { j: usize },
    AverageEnergy { mean: f64, target: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SizeMismatch { eps, eta, m } => {
                write!(f, "size: |eps|={eps}, |eta|={eta}, M={m}")
            }
            Violation::NonFinite => write!(f, "non-finite energy"),
            Violation::AlphaRange { alpha } => write!(f, "alpha={alpha} outside (0,1)"),
            Violation::Negative { name, j, value } => {
                write!(f, "{name}_{j}={value} is negative")
            }
            Violation::EpsNotIncreasing { j } => write!(f, "monotonicity: eps_{j} >= eps_{}", j + 1),
            Violation::EtaNotIncreasing { j } => write!(f, "monotonicity: eta_{j} >= eta_{}", j + 1),
            Violation::OddPairOrder { j } => write!(f, "pair order: eps_{j} >= eta_{j} (odd j)"),
            Violation::EvenPairOrder { j } => write!(f, "pair order: eps_{j} <= eta_{j} (even j)"),
            Violation::AverageEnergy { mean, target } => {
                write!(f, "average energy: mean={mean}, required (1+alpha)/2={target}")
            }
        }
    }
}

/// Slack on strict inequalities: `a < b` is accepted when `a − b ≤ 1e−12`.
pub const ORDER_MARGIN: f64 = 1e-12;
/// Absolute tolerance on the average-energy constraint.
pub const ENERGY_TOL: f64 = 1e-9;

/// Returns every violated ordering / average-energy constraint; empty means valid.
pub fn constellation_violations<T: Scalar>(
    c: &Constellation<T>,
    cfg: &SystemConfig<T>,
) -> Vec<Violation> {
    constellation_violations_with(c, cfg, T::lit(ENERGY_TOL))
}

/// As [`constellation_violations`] with an explicit average-energy tolerance,
/// e.g. for energies that were printed with a handful of decimals.
pub fn constellation_violations_with<T: Scalar>(
    c: &Constellation<T>,
    cfg: &SystemConfig<T>,
    energy_tol: T,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = cfg.m;
    if c.eps.len() != m || c.eta.len() != m {
        out.push(Violation::SizeMismatch {
            eps: c.eps.len(),
            eta: c.eta.len(),
            m,
        });
        return out;
    }
    if c.eps.iter().chain(c.eta.iter()).any(|v| !v.is_finite()) || !c.alpha.is_finite() {
        out.push(Violation::NonFinite);
        return out;
    }
    if !(c.alpha > T::zero() && c.alpha < T::one()) {
        out.push(Violation::AlphaRange {
            alpha: c.alpha.as_f64(),
        });
    }
    for (name, v) in [("eps", &c.eps), ("eta", &c.eta)] {
        for (k, &x) in v.iter().enumerate() {
            if x < T::zero() {
                out.push(Violation::Negative {
                    name,
                    j: k + 1,
                    value: x.as_f64(),
                });
            }
        }
    }
    let margin = T::lit(ORDER_MARGIN);
    // "a < b" fails only when a exceeds b by more than the margin.
    let not_less = |a: T, b: T| a - b > margin;
    for j in 1..m {
        if not_less(c.eps[j - 1], c.eps[j]) {
            out.push(Violation::EpsNotIncreasing { j });
        }
        if not_less(c.eta[j - 1], c.eta[j]) {
            out.push(Violation::EtaNotIncreasing { j });
        }
    }
    for j in 1..=m {
        let (e, h) = (c.eps[j - 1], c.eta[j - 1]);
        if j % 2 == 1 {
            if not_less(e, h) {
                out.push(Violation::OddPairOrder { j });
            }
        } else if not_less(h, e) {
            out.push(Violation::EvenPairOrder { j });
        }
    }
    let target = (T::one() + c.alpha) / T::lit(2.0);
    let mean = c.mean_energy();
    let tol = energy_tol.max(T::epsilon() * T::lit(64.0));
    if (mean - target).abs() > tol {
        out.push(Violation::AverageEnergy {
            mean: mean.as_f64(),
            target: target.as_f64(),
        });
    }
    out
}

/// `Ok(())` or [`Error::InvalidConstellation`] carrying every violation.
pub fn validate_constellation<T: Scalar>(
    c: &Constellation<T>,
    cfg: &SystemConfig<T>,
) -> Result<()> {
    let v = constellation_violations(c, cfg);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConstellation(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row1() -> Constellation<f64> {
        Constellation::from_level_order(&[0.0, 1e-6, 0.3052, 2.6421], 0.4736).unwrap()
    }

    #[test]
    fn figure_three_indices() {
        assert_eq!(index_from_pair(0, 1, 2).unwrap(), 1);
        assert_eq!(index_from_pair(1, 1, 2).unwrap(), 2);
        assert_eq!(index_from_pair(1, 2, 2).unwrap(), 3);
        assert_eq!(index_from_pair(0, 2, 2).unwrap(), 4);
        assert_eq!(index_from_pair(0, 3, 4).unwrap(), 5);
        assert_eq!(index_from_pair(1, 4, 4).unwrap(), 7);
        assert_eq!(pair_from_index(1, 2).unwrap(), (0, 1));
        assert_eq!(pair_from_index(3, 2).unwrap(), (1, 2));
    }

    #[test]
    fn index_matches_signed_closed_forms() {
        for m in [2usize, 4, 8, 16] {
            for j in 1..=m {
                let s: i64 = if j % 2 == 0 { 1 } else { -1 };
                let jj = j as i64;
                let l0 = (4 * jj + s - 1) / 2;
                let l1 = (s * (4 * s * jj - s - 1)) / 2;
                assert_eq!(index_from_pair(0, j, m).unwrap() as i64, l0);
                assert_eq!(index_from_pair(1, j, m).unwrap() as i64, l1);
            }
        }
    }

    #[test]
    fn index_domain_errors() {
        assert!(index_from_pair(2, 1, 2).is_err());
        assert!(index_from_pair(0, 0, 2).is_err());
        assert!(index_from_pair(0, 3, 2).is_err());
        assert!(pair_from_index(0, 2).is_err());
        assert!(pair_from_index(5, 2).is_err());
    }

    #[test]
    fn level_order_round_trip() {
        let c = row1();
        assert_eq!(c.eps, vec![0.0, 2.6421]);
        assert_eq!(c.eta, vec![1e-6, 0.3052]);
        assert_eq!(c.level_order(), vec![0.0, 1e-6, 0.3052, 2.6421]);
    }

    #[test]
    fn table_row_one_levels() {
        let c = row1();
        let n_o = 10f64.powf(-0.5);
        let lv = build_sum_levels(&c, n_o).unwrap();
        assert_eq!(lv.s[0], n_o);
        assert!((lv.s[1] - (1.0 - 0.4736 + 1e-6 + n_o)).abs() < 1e-15);
        assert!((lv.s[3] - (2.6421 + n_o)).abs() < 1e-15);
        let cfg = SystemConfig::new(1, 8, 2, 5.0);
        // Four printed decimals leave the average energy off by ~2.5e-7.
        assert!(constellation_violations_with(&c, &cfg, 1e-4).is_empty());
        assert!(matches!(
            constellation_violations(&c, &cfg)[..],
            [Violation::AverageEnergy { .. }]
        ));
    }

    #[test]
    fn alpha_one_collapses_complementary_set() {
        let c = Constellation::new(vec![0.1, 0.9], vec![0.1, 0.9], 1.0 - 1e-17).unwrap();
        let lv = build_sum_levels(&c, 0.01);
        // ε_j = η_j makes S non-increasing between the paired positions.
        assert!(matches!(lv, Err(Error::Ordering { .. })));
        let c = Constellation::new(vec![0.0, 0.9], vec![0.3, 0.5], 1.0).unwrap();
        let lv = build_sum_levels(&c, 0.01).unwrap();
        for (k, (&a, &b)) in lv.s.iter().zip(&lv.s_bar).enumerate() {
            let (i, j) = pair_from_index(k + 1, 2).unwrap();
            let want = if i == 0 { c.eta[j - 1] } else { c.eps[j - 1] } + 0.01;
            assert_eq!(b, want);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn validator_reports_violations() {
        let cfg = SystemConfig::new(1, 8, 2, 14.0);
        let c = Constellation::new(vec![1.0, 0.5], vec![0.2, 0.3], 0.5).unwrap();
        let v = constellation_violations(&c, &cfg);
        assert!(v.contains(&Violation::EpsNotIncreasing { j: 1 }));
        let c = Constellation::new(vec![0.0, 2.0], vec![0.1, 0.5], 0.5).unwrap();
        let v = constellation_violations(&c, &cfg);
        assert!(matches!(v[..], [Violation::AverageEnergy { .. }]));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SystemConfig::<f64>::default();
        assert!(cfg.validate().is_ok());
        cfg.m = 3;
        assert!(cfg.validate().is_err());
        cfg.m = 4;
        cfg.sigma2_ac = 0.5;
        assert!(cfg.validate().is_err());
        cfg.sigma2_ac = 4.0;
        cfg.lambda_db = None;
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.lambda(), 0.0);
    }

    #[test]
    fn config_serde_names() {
        let cfg = SystemConfig::<f64>::default();
        let text = serde_json_like(&cfg);
        for key in ["N_C", "N_B", "M", "snr_db", "lambda_db", "sigma2_AC", "sigma2_AB", "sigma2_CB", "partial_d", "delay_n"] {
            assert!(text.contains(&format!("\"{key}\"")), "{key} missing in {text}");
        }
    }

    fn serde_json_like(cfg: &SystemConfig<f64>) -> String {
        // Keep the core free of a JSON dependency in non-test code.
        serde_json::to_string(cfg).unwrap()
    }
}
