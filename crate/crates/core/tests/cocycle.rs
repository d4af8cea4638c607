mod common;

use amolab_core::cocycle::*;
use amolab_core::operator::{potential, window_max, Window};
use common::*;
use proptest::prelude::*;

/// Naive product with exact power-of-two rescaling; returns (matrix, log2 scale).
fn naive_product(energy: f64, p: &amolab_core::ModelParams, from: i64, to: i64) -> (Mat2, i64) {
    let mut m: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut e2 = 0i64;
    for k in from..to {
        m = mat_mul(&transfer_step(energy, p, k), &m);
        let big = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        let shift = big.log2().floor() as i32;
        let f = 2f64.powi(-shift);
        m = m.map(|r| r.map(|x| x * f));
        e2 += shift as i64;
    }
    (m, e2)
}

#[test]
fn short_product_matches_naive() {
    let p = golden(3.0, 0.37);
    for e in [-4.1, 0.3, 2.2] {
        let s = transfer_product(e, &p, -7, 13).unwrap();
        let (m, e2) = naive_product(e, &p, -7, 13);
        let got = s.to_matrix();
        let scale = 2f64.powi(e2 as i32);
        let norm = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())) * scale;
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[i][j] - m[i][j] * scale).abs() <= 1e-10 * norm, "E={e}");
            }
        }
        let mm = s.m();
        let mx = mm.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!((0.5..=2.0).contains(&mx));
        assert!((s.log_scale().exp() * mm[0][1] - got[0][1]).abs() <= 1e-10 * norm);
    }
}

#[test]
fn long_product_stays_finite() {
    let p = golden(3.0, 0.2);
    let es = solve(&p, Window::symmetric(200));
    let e = es.energy(200);
    let s = transfer_product(e, &p, 0, 100_000).unwrap();
    let expected = 1e5 * 3f64.ln();
    assert!(s.log_scale().is_finite());
    assert!((s.log_scale() - expected).abs() < 0.02 * expected);
}

#[test]
fn determinant_stays_one() {
    let p = golden(5.0, 0.61);
    let s = transfer_product(1.7, &p, -500_000, 500_000).unwrap();
    assert!((s.det() - 1.0).abs() < 1e-8, "det {}", s.det());
}

#[test]
fn step_propagates_eigenvectors() {
    let p = golden(2.0, 0.15);
    let w = Window::symmetric(60);
    let es = solve(&p, w);
    for s in (0..es.len()).step_by(7) {
        let phi = es.vector(s);
        for k in -55..55 {
            let t = transfer_step(es.energy(s), &p, k);
            let i = w.index_of(k).unwrap();
            let next = t[0][0] * phi[i] + t[0][1] * phi[i - 1];
            assert!((next - phi[i + 1]).abs() < 1e-12);
            assert_eq!(t[1][0] * phi[i] + t[1][1] * phi[i - 1], phi[i]);
        }
    }
}

#[test]
fn lyapunov_on_spectrum() {
    let p = golden(3.0, 0.44);
    let es = solve(&p, Window::symmetric(200));
    let energies: Vec<f64> = (0..es.len()).step_by(40).map(|s| es.energy(s)).collect();
    for est in lyapunov_grid(&energies, &p, 100_000).unwrap() {
        assert!((est.value - 3f64.ln()).abs() < 0.02 * 3f64.ln(), "{est:?}");
    }
}

#[test]
fn lyapunov_far_outside_spectrum() {
    let p = golden(2.0, 0.71);
    let est = lyapunov_estimate(100.0, &p, 1000).unwrap();
    let (m, e2) = naive_product(100.0, &p, 0, 1000);
    let oracle = (spectral_norm(&m).ln() + e2 as f64 * 2f64.ln()) / 1000.0;
    assert!((est.value - oracle).abs() < 1e-6, "{} vs {oracle}", est.value);
}

#[test]
fn lyapunov_shift_invariance() {
    let p = golden(2.0, 0.3);
    let q = p.with_theta((p.theta + p.alpha.value()).rem_euclid(1.0));
    let es = solve(&p, Window::symmetric(100));
    let e = es.energy(90);
    let a = lyapunov_estimate(e, &p, 20_000).unwrap();
    let b = lyapunov_estimate(e, &q, 20_000).unwrap();
    assert!((a.value - b.value).abs() <= a.spread() + b.spread() + 1e-3);
}

#[test]
fn growth_constant_matches_pair_scan() {
    let p = golden(3.0, 0.27);
    let w = Window::symmetric(150);
    let es = solve(&p, w);
    let l = 3f64.ln();
    let eps = 0.1 * l;
    let s = es.metas().iter().position(|m| m.center.abs() < 10).unwrap();
    let phi = es.vector(s);
    let r = growth_bound_check(phi, w, l, eps, 1e6).unwrap();
    let norm = |y: i64| {
        let i = w.index_of(y).unwrap();
        phi[i].hypot(phi[i - 1])
    };
    let mut c = 0.0f64;
    for k1 in -149..=150i64 {
        for k2 in -149..=150i64 {
            let d = (k1 - k2).abs();
            if d >= 20 {
                c = c.max(norm(k1) / (norm(k2) * ((l + eps) * d as f64).exp()));
            }
        }
    }
    assert!(r.constant.is_finite());
    assert!((r.constant - c).abs() <= 1e-9 * c, "{} vs {c}", r.constant);
    assert!(r.violation.is_none());
}

#[test]
fn window_max_matches_scan() {
    let p = golden(2.0, 0.9);
    let w = Window::symmetric(50);
    let es = solve(&p, w);
    let phi = es.vector(33);
    for y in -40..=40 {
        for radius in [0u64, 3, 10] {
            let scan = (y - radius as i64..=y + radius as i64)
                .map(|x| phi[w.index_of(x).unwrap()].abs())
                .fold(0.0, f64::max);
            assert_eq!(window_max(phi, w, y, radius).unwrap(), scan);
        }
    }
}

#[test]
fn block_decay_gates_close_points() {
    let p = golden(3.0, 0.123);
    let w = Window::symmetric(260);
    let phi = vec![1.0; w.len()];
    let g = BlockGeometry { k: 100, gamma: 0.02, epsilon: 0.1, c: 1.0, y3: 200 };
    let r = block_decay_check(&phi, w, &p, &g).unwrap();
    for &(y, v) in &r.points {
        let near = [0, r.k0, 200].iter().any(|&n| (y - n).abs() < 20);
        if near {
            assert_eq!(v, PointVerdict::Inapplicable, "y={y}");
        }
    }
    assert!(r.checked > 0);
}

/// Eigenfunctions recentred at their localization center, with the phase
/// shifted to match.
fn recentred_block_fraction() -> f64 {
    let l = 3f64.ln();
    let (mut checked, mut passed) = (0, 0);
    for j in 0..10 {
        let theta = 0.05 + 0.093 * j as f64;
        let p = golden(3.0, theta);
        let w = Window::symmetric(300);
        let es = solve(&p, w);
        for s in 0..es.len() {
            let c = es.meta(s).center;
            if c.abs() > 20 {
                continue;
            }
            let pc = p.with_theta((theta + c as f64 * p.alpha.value()).rem_euclid(1.0));
            let g = BlockGeometry { k: 100, gamma: 0.02, epsilon: 0.1 * l, c: 1.0, y3: 200 };
            let r = block_decay_check(es.vector(s), w.shifted(-c), &pc, &g).unwrap();
            checked += r.checked;
            passed += r.passed;
        }
    }
    passed as f64 / checked as f64
}

#[test]
#[ignore = "fails at this scale: the 10γk window maxima outgrow the 3γk shift in the exponent"]
fn block_decay_pass_fraction() {
    let f = recentred_block_fraction();
    assert!(f >= 0.95, "pass fraction {f}");
}

#[test]
fn single_resonance_constructed_phase() {
    let l = 3f64.ln();
    let t = 0.5 * l;
    let k = 40i64;
    let ka = golden(3.0, 0.0).alpha.multiple(k).fract().to_f64();
    let target = (-t * k as f64).exp();
    let theta = ((target.asin() / std::f64::consts::PI - ka) / 2.0).rem_euclid(1.0);
    let p = golden(3.0, theta);
    let w = Window::symmetric(150);
    let es = solve(&p, w);
    let t_actual = -p.resonance_sine(k).ln() / k as f64;
    assert!((t_actual - t).abs() < 1e-6 * t);
    let mut seen = 0;
    for s in 0..es.len() {
        if es.meta(s).center != 0 {
            continue;
        }
        seen += 1;
        match single_resonance_check(es.vector(s), w, &p, k, t_actual, 0.1 * l).unwrap() {
            ResonanceVerdict::Checked { holds, lhs, rhs } => assert!(holds, "{lhs} > {rhs}"),
            v => panic!("{v:?}"),
        }
    }
    assert!(seen > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steps_are_unimodular(lambda in 0.0f64..6.0, theta in 0.0f64..1.0, e in -15.0f64..15.0, k in -100_000i64..100_000) {
        let m = transfer_step(e, &golden(lambda, theta), k);
        prop_assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1.0);
        prop_assert_eq!(m[0][0], e - potential(&golden(lambda, theta), k));
    }

    #[test]
    fn products_keep_unit_determinant(lambda in 0.5f64..6.0, theta in 0.0f64..1.0, e in -10.0f64..10.0, n in 1i64..20_000) {
        let s = transfer_product(e, &golden(lambda, theta), -n / 2, n).unwrap();
        prop_assert!((s.det() - 1.0).abs() < 1e-8);
        let mm = s.m();
        let mx = mm.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        prop_assert!((0.5..=2.0).contains(&mx));
    }
}
