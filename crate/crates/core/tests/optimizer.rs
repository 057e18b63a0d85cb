use ncfffd::model::{build_sum_levels, validate_constellation};
use ncfffd::optimizer::{
    alpha_balance, dt_eb_with, eb_with, eta2_balance, levels_objective, optimize_sum_levels, tlgd,
    tlgd_objective, EbParams, TlgdParams, TlgdPoint,
};
use ncfffd::sep::{sep_approx, sep_exact};
use ncfffd::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn net(s: &[f64], n_o: f64) -> Vec<f64> {
    s.iter().map(|v| v - n_o).collect()
}

#[test]
fn tlgd_close_to_table_at_14_db() {
    let cfg = SystemConfig::new(1, 8, 2, 14.0);
    let r = tlgd(&cfg, &TlgdParams::default()).unwrap();
    let p = sep_exact(&r.constellation, &cfg).unwrap().p_e;
    assert!((p - 8.42e-2).abs() / 8.42e-2 < 0.05, "exact SEP {p}");
    assert_eq!(r.constellation.eps[0], 0.0);
    validate_constellation(&r.constellation, &cfg).unwrap();
}

#[test]
fn tlgd_descends_and_beats_grid() {
    let cfg = SystemConfig::new(1, 8, 2, 14.0);
    let params = TlgdParams::default();
    let r = tlgd(&cfg, &params).unwrap();
    let c = &r.constellation;
    let got = tlgd_objective(
        &cfg,
        TlgdPoint {
            eta1: c.eta[0],
            eta2: c.eta[1],
            alpha: c.alpha,
        },
    )
    .unwrap();
    let start = r.trace.first().unwrap().objective;
    assert!(got <= start);

    let n = 50;
    let mut grid_min = f64::INFINITY;
    for a in 0..n {
        let alpha = 0.02 + 0.96 * a as f64 / (n - 1) as f64;
        for e1 in 0..n {
            let eta1 = 0.3 * e1 as f64 / (n - 1) as f64;
            for e2 in 0..n {
                let eta2 = eta1 + 1e-3 + 1.5 * e2 as f64 / (n - 1) as f64;
                let p = TlgdPoint { eta1, eta2, alpha };
                if validate_constellation(&p.constellation(), &cfg).is_err() {
                    continue;
                }
                if let Ok(v) = tlgd_objective(&cfg, p) {
                    grid_min = grid_min.min(v);
                }
            }
        }
    }
    assert!(grid_min.is_finite());
    assert!(grid_min >= got - 2.0 * params.delta_pe, "grid {grid_min} < tlgd {got}");
}

fn sign_changes(v: &[f64]) -> usize {
    v.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

#[test]
fn balance_terms_cross_once() {
    let cfg = SystemConfig::new(1, 8, 2, 14.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 20 {
        let eta1: f64 = rng.random_range(0.0..0.05);
        let alpha = rng.random_range(0.3..0.95);
        let hi = (1.0 + alpha - 0.5 * eta1).min((1.0 + 3.0 * alpha - eta1) / 2.0);
        let lo = eta1 + 1e-6;
        let v: Vec<f64> = (1..1000)
            .map(|k| {
                let eta2 = lo + (hi - 1e-6 - lo) * k as f64 / 1000.0;
                eta2_balance(&cfg, TlgdPoint { eta1, eta2, alpha }).unwrap()
            })
            .collect();
        assert_eq!(sign_changes(&v), 1, "eta2 balance, η1={eta1} α={alpha}");
        checked += 1;
    }
    checked = 0;
    while checked < 20 {
        let eta1: f64 = rng.random_range(0.0..0.05);
        let eta2 = rng.random_range(0.3..0.7);
        let lo = (1e-4f64).max((2.0 * eta2 + eta1 - 1.0) / 3.0 + 1e-6);
        let v: Vec<f64> = (1..1000)
            .map(|k| {
                let alpha = lo + (1.0 - 1e-4 - lo) * k as f64 / 1000.0;
                alpha_balance(&cfg, TlgdPoint { eta1, eta2, alpha }).unwrap()
            })
            .collect();
        assert_eq!(sign_changes(&v), 1, "alpha balance, η1={eta1} η2={eta2}");
        checked += 1;
    }
}

#[test]
fn two_levels_are_pushed_apart() {
    let n_o = 0.05;
    let s = optimize_sum_levels(1, 4, n_o).unwrap();
    assert_eq!(s.len(), 2);
    assert!((s[0] - n_o).abs() < 1e-12);
    assert!((s[1] - (2.0 + n_o)).abs() < 1e-9);
}

#[test]
fn levels_are_locally_optimal() {
    for &(m, n_b, snr) in &[(2usize, 8usize, 20.0), (2, 2, 10.0), (4, 8, 20.0)] {
        let n_o = 10f64.powf(-snr / 10.0);
        let s = optimize_sum_levels(m, n_b, n_o).unwrap();
        let x = net(&s, n_o);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        let f0 = levels_objective(&x, n_b, n_o);
        // Move one free level by ±1% and restore the mean with the top level.
        let last = x.len() - 1;
        for k in 1..last {
            for f in [0.99, 1.01] {
                let mut y = x.clone();
                let d = y[k] * (f - 1.0);
                y[k] += d;
                y[last] -= d;
                if y.windows(2).all(|w| w[1] > w[0]) {
                    let f1 = levels_objective(&y, n_b, n_o);
                    assert!(f1 >= f0 * (1.0 - 1e-9), "M={m} coord {k}: {f1} < {f0}");
                }
            }
        }
    }
}

#[test]
fn levels_beat_random_search() {
    let (n_b, n_o) = (8, 0.01);
    let s = optimize_sum_levels(2, n_b, n_o).unwrap();
    let best = levels_objective(&net(&s, n_o), n_b, n_o);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let mut x = vec![0.0];
        for _ in 0..3 {
            let last = *x.last().unwrap();
            x.push(last + rng.random_range(0.0..1.0));
        }
        let scale = 4.0 / x.iter().sum::<f64>();
        let x: Vec<f64> = x.iter().map(|v| v * scale).collect();
        assert!(levels_objective(&x, n_b, n_o) >= best);
    }
}

#[test]
fn more_bob_antennas_never_hurt() {
    let n_o = 10f64.powf(-1.4);
    let mut prev = f64::INFINITY;
    for n_b in [2, 4, 8, 16] {
        let s = optimize_sum_levels(2, n_b, n_o).unwrap();
        let v = levels_objective(&net(&s, n_o), n_b, n_o);
        assert!(v <= prev, "N_B={n_b}");
        prev = v;
    }
}

fn eb_params() -> EbParams {
    EbParams::new(1e-2).with_cap(4096)
}

#[test]
fn eb_invariants() {
    for &(m, n_b, snr) in &[(2usize, 8usize, 14.0), (2, 8, 25.0), (4, 8, 20.0), (2, 2, 10.0)] {
        let cfg = SystemConfig::new(1, n_b, m, snr);
        let n_o = cfg.noise();
        let r = eb_with(&cfg, &eb_params()).unwrap();
        let c = &r.constellation;
        let s = r.sum_levels.as_ref().unwrap();
        assert_eq!(c.alpha, 1.0 - (s[1] - n_o));
        assert!((c.mean_energy() - (1.0 + c.alpha) / 2.0).abs() < 1e-9);
        let lv = build_sum_levels(c, n_o).unwrap();
        assert!(lv.s_bar.iter().all(|&v| v >= 0.0));
        assert!(c.eta.iter().all(|&v| v >= 0.0));
        let n_c = r.n_c_required.unwrap();
        let mut probe = cfg.clone();
        probe.n_c = n_c;
        validate_constellation(c, &probe).unwrap();
        let approx = sep_approx(&lv, n_b).unwrap();
        let mut rel = |n| {
            probe.n_c = n;
            (approx - sep_exact(c, &probe).unwrap().p_e).abs() / approx
        };
        assert!(rel(n_c) < 1e-2);
        if n_c > 1 {
            assert!(rel(n_c - 1) >= 1e-2, "M={m} N_B={n_b} {snr} dB");
        }
    }
}

#[test]
fn eb_needs_tens_of_antennas() {
    let mut prev = f64::INFINITY;
    for snr in [5.0, 10.0, 15.0, 20.0, 25.0] {
        let r = eb_with(&SystemConfig::new(1, 8, 2, snr), &eb_params()).unwrap();
        assert!(r.achieved_sep < prev);
        assert!(r.n_c_required.unwrap() < 100);
        prev = r.achieved_sep;
    }
}

#[test]
fn tighter_target_needs_more_antennas() {
    let cfg = SystemConfig::new(1, 8, 2, 14.0);
    let mut prev = 0;
    for d in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let n = eb_with(&cfg, &EbParams::new(d).with_cap(4096)).unwrap().n_c_required.unwrap();
        assert!(n >= prev, "Δ_RE={d}");
        prev = n;
    }
}

#[test]
fn dt_eb_fixes_direct_link_and_needs_more_antennas() {
    for &(n_b, snr) in &[(8usize, 14.0), (8, 25.0), (4, 20.0)] {
        let cfg = SystemConfig::new(1, n_b, 2, snr);
        let n_o = cfg.noise();
        let dt = dt_eb_with(&cfg, &eb_params(), 0.1).unwrap();
        assert_eq!(dt.constellation.alpha, 1.0 - 0.1 * n_o);
        assert!((1.0 - dt.constellation.alpha - 0.1 * n_o).abs() < 1e-15);
        let base = eb_with(&cfg, &eb_params()).unwrap();
        assert!(dt.n_c_required.unwrap() >= base.n_c_required.unwrap());
    }
}

#[test]
fn eb_rejects_bad_targets() {
    let cfg = SystemConfig::new(1, 8, 2, 14.0);
    assert!(eb_with(&cfg, &EbParams::new(0.0)).is_err());
    assert!(eb_with(&cfg, &EbParams::new(1e-2).with_cap(0)).is_err());
    assert!(dt_eb_with(&cfg, &EbParams::new(1e-2), 0.0).is_err());
}
