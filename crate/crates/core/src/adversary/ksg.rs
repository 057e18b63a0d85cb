//! Kraskov–Stögbauer–Grassberger mutual-information estimator (first
//! variant): `ψ(k) + ψ(N) − ⟨ψ(n_u + 1) + ψ(n_v + 1)⟩` with max-norm
//! neighbourhoods and strict marginal counts.

use crate::error::{Error, Result};
use crate::numerics::digamma;

/// MI estimate in nats between paired samples `u` and `v`.
pub fn ksg_mi(u: &[f64], v: &[f64], k: usize) -> Result<f64> {
    let n = u.len();
    if n != v.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: v.len(),
        });
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if k >= n {
        return Err(Error::domain(format!("need more than k = {k} samples, got {n}")));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::domain("samples must be finite"));
    }

    let su = sorted(u);
    let sv = sorted(v);
    let mut dist = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        let eps = kth_neighbour_distance(u, v, i, k, &mut dist);
        // Points strictly inside the marginal strips, excluding i itself.
        let nu = count_within(&su, u[i], eps) - 1;
        let nv = count_within(&sv, v[i], eps) - 1;
        acc += digamma(nu as f64 + 1.0) + digamma(nv as f64 + 1.0);
    }
    Ok(digamma(k as f64) + digamma(n as f64) - acc / n as f64)
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Max-norm distance from point `i` to its k-th nearest other point.
fn kth_neighbour_distance(u: &[f64], v: &[f64], i: usize, k: usize, buf: &mut [f64]) -> f64 {
    let mut len = 0;
    for j in 0..u.len() {
        if j != i {
            buf[len] = (u[i] - u[j]).abs().max((v[i] - v[j]).abs());
            len += 1;
        }
    }
    let slice = &mut buf[..len];
    let (_, kth, _) = slice.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Number of sorted values `y` with `|y − x| < eps` (includes `x` itself).
fn count_within(sorted: &[f64], x: f64, eps: f64) -> usize {
    let lo = sorted.partition_point(|&y| y <= x - eps);
    let hi = sorted.partition_point(|&y| y < x + eps);
    // `x` is always present, so the strip is never empty.
    (hi - lo).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_in_arguments() {
        let u: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 * 0.1).collect();
        let v: Vec<f64> = (0..50).map(|i| ((i * 11 + 3) % 50) as f64 * 0.07).collect();
        let a = ksg_mi(&u, &v, 3).unwrap();
        let b = ksg_mi(&v, &u, 3).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ksg_mi(&[1.0, 2.0], &[1.0], 1).is_err());
        assert!(ksg_mi(&[1.0, 2.0], &[1.0, 3.0], 2).is_err());
        assert!(ksg_mi(&[1.0, 2.0], &[1.0, 3.0], 0).is_err());
    }
}
