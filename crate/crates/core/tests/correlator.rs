mod common;

use amolab_core::correlator::*;
use amolab_core::operator::Window;
use amolab_core::resonance::IntervalSet;
use common::*;
use proptest::prelude::{prop_assert, proptest, ProptestConfig};

fn stratified(seed: u64, shell: usize, bulk: usize) -> Strategy {
    Strategy::Stratified(StratifiedSpec {
        ladder: StratifiedSpec::default_ladder(),
        shell_samples: shell,
        bulk_points: bulk,
        seed,
    })
}

#[test]
fn zero_distance_is_one() {
    let p = golden(3.0, 0.123);
    let es = solve(&p, Window::symmetric(60));
    assert!((correlator_at(&es, 0).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn single_site_window_rejects_other_sites() {
    let p = golden(2.0, 0.3);
    let es = solve(&p, Window::new(0, 0).unwrap());
    assert!((correlator_at(&es, 0).unwrap() - 1.0).abs() < 1e-12);
    assert!(correlator_at(&es, 1).is_err());
    assert!(correlator_at(&es, -3).is_err());
}

#[test]
fn matches_dense_oracle() {
    let p = golden(3.0, 0.2718);
    let w = Window::new(-30, 50).unwrap();
    let es = solve(&p, w);
    let (_, vecs) = dense_oracle(&p, w);
    let (i0, il) = (w.index_of(0).unwrap(), w.index_of(20).unwrap());
    let oracle: f64 = vecs.iter().map(|v| (v[i0] * v[il]).abs()).sum();
    let got = correlator_at(&es, 20).unwrap();
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
}

#[test]
fn constant_integrand_is_exact_for_every_strategy() {
    let p = golden(2.0, 0.0);
    for strategy in [
        Strategy::UniformGrid { points: 997 },
        Strategy::MonteCarlo { samples: 500, seed: 3 },
        stratified(5, 64, 2000),
    ] {
        let quad = Quadrature::for_strategy(&strategy, &p, 10).unwrap();
        let est = expectation(10, &quad, |_| Ok(0.37)).unwrap();
        assert!((est.estimate - 0.37).abs() < 1e-12, "{} {}", strategy.name(), est.estimate);
        let parts = est.bulk + est.shells.iter().sum::<f64>();
        assert!((parts - est.estimate).abs() < 1e-15);
    }
}

#[test]
fn shells_partition_the_circle() {
    let p = golden(2.0, 0.0);
    let plan = shell_plan(&p, 10, &StratifiedSpec::default_ladder()).unwrap();
    let total = plan.bulk.measure() + plan.shells.iter().map(|s| s.measure()).sum::<f64>();
    assert!((total - 1.0).abs() < 1e-12);
    for (a, b) in plan.shells.iter().zip(plan.shells.iter().skip(1)) {
        assert!(a.intersection(b).measure() < 1e-13);
    }
    // The deepest shell scales like the threshold.
    let deep = plan.shells.last().unwrap().measure();
    assert!(deep <= 21.0 * plan.thresholds[7] * 1.01);
}

#[test]
fn grid_and_stratified_agree() {
    let p = golden(2.0, 0.0);
    let margin = default_margin(p.lyapunov());
    let ev = ProfileEvaluator::new(&p, 10, 10, margin).unwrap();
    let grid = estimate_correlator(&ev, 10, &Strategy::UniformGrid { points: 200_000 }).unwrap();
    let strat = estimate_correlator(&ev, 10, &stratified(11, 512, 20_000)).unwrap();
    let gap = (grid.estimate - strat.estimate).abs();
    let bar = 3.0 * (grid.error.powi(2) + strat.error.powi(2)).sqrt();
    assert!(gap <= bar.max(1e-3 * grid.estimate), "{} vs {} (bar {bar})", grid.estimate, strat.estimate);
}

#[test]
fn upper_bound_on_short_range() {
    let p = golden(2.0, 0.0);
    let l = p.lyapunov();
    let ev = ProfileEvaluator::new(&p, 4, 14, default_margin(l)).unwrap();
    for ell in (4..=14).step_by(5) {
        let est = estimate_correlator(&ev, ell, &Strategy::UniformGrid { points: 4000 }).unwrap();
        assert!(est.estimate <= (-0.8 * l * ell as f64).exp(), "ell {ell}: {}", est.estimate);
    }
    // One eigensolve per phase serves every l.
    assert_eq!(ev.cached(), 4000);
}

#[test]
fn gamma_fit_scale_invariance() {
    let base: Vec<(i64, f64)> = (4..=24).map(|l| (l, (-0.7 * l as f64).exp())).collect();
    let scaled: Vec<(i64, f64)> = base.iter().map(|&(l, e)| (l, 5.0 * e)).collect();
    let a = gamma_fit(&base).unwrap();
    let b = gamma_fit(&scaled).unwrap();
    assert!((a.slope - 0.7).abs() < 1e-10 && (b.slope - 0.7).abs() < 1e-10);
    assert!((b.intercept + 5f64.ln()).abs() < 1e-10);
}

#[test]
fn alternating_prefactor_proxies_converge() {
    let spread = |hi: i64| {
        let pts: Vec<(i64, f64)> = (4..=hi)
            .map(|l| {
                let c = if l % 2 == 0 { 1.5 } else { 0.5 };
                (l, c * (-1.1 * l as f64).exp())
            })
            .collect();
        let g = gamma_fit(&pts).unwrap();
        g.gamma_plus - g.gamma_minus
    };
    let (a, b, c) = (spread(24), spread(200), spread(2000));
    assert!(a > b && b > c && c < 5e-3, "{a} {b} {c}");
}

#[test]
fn decomposition_partitions_the_expectation() {
    let p = golden(2.0, 0.0);
    let ev = ProfileEvaluator::new(&p, 12, 12, default_margin(p.lyapunov())).unwrap();
    let quad = Quadrature::uniform_grid(400).unwrap();
    let est = expectation(12, &quad, |t| ev.value(t, 12)).unwrap();
    let dec = decompose_by_center(&ev, 12, &quad, 0.2).unwrap();
    assert!((dec.total - est.estimate).abs() < 1e-10 * est.estimate.max(1e-300) + 1e-16);
    let parts = dec.part_i + dec.part_ii + dec.part_iii;
    assert!((parts - dec.total).abs() <= 1e-15 + 1e-12 * dec.total);

    let wide = decompose_by_center(&ev, 12, &quad, 0.49).unwrap();
    // Only n = 6 is strictly between 5.88 and 6.12.
    let middle: Vec<i64> = wide.rows.iter().filter(|r| r.0 > 5 && r.0 < 7).map(|r| r.0).collect();
    assert!(middle.iter().all(|&n| n == 6));
    assert!(decompose_by_center(&ev, 12, &quad, 0.5).is_err());
}

#[test]
fn layercake_trivial_integrands() {
    let omega = IntervalSet::from_arcs([(0.1, 0.4), (0.6, 0.65)]);
    let c = layercake_check(&omega, 1000, |_| Ok(0.3)).unwrap();
    assert!((c.lhs - 0.3 * 0.35).abs() < 1e-14 && (c.rhs - 0.3 * 0.35).abs() < 1e-14);

    let sub = IntervalSet::from_arcs([(0.2, 0.3)]);
    let c = layercake_check(&omega, 7000, |t| Ok(if sub.contains(t) { 1.0 } else { 0.0 })).unwrap();
    assert!((c.lhs - 0.1).abs() < 1e-4 && (c.rhs - 0.1).abs() < 1e-4);
    assert!(layercake_check(&omega, 10, |_| Ok(1.5)).is_err());
}

#[test]
fn layercake_on_correlator() {
    let p = golden(2.0, 0.0);
    let ev = ProfileEvaluator::new(&p, 8, 8, default_margin(p.lyapunov())).unwrap();
    let c = layercake_check(&IntervalSet::full(), 20_000, |t| ev.value(t, 8)).unwrap();
    assert!(c.residual < 1e-4, "{c:?}");
}

#[test]
fn lower_bound_wide_gamma() {
    let p = golden(2.0, 0.0);
    let l = p.lyapunov();
    let r = lower_bound_experiment(&p, 4, 2.0 * l, 20, 1, default_margin(l)).unwrap();
    assert!(!r.inconclusive);
    assert_eq!(r.samples.len(), 20);
    assert!(r.integral_bound >= r.target, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn domination_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, k in 1u32..5, seed in 0u64..100) {
        let p = golden(2.0, 0.0);
        let f = move |t: f64| (a * (std::f64::consts::TAU * k as f64 * t).sin().abs()).min(1.0);
        for strategy in [Strategy::UniformGrid { points: 301 }, Strategy::MonteCarlo { samples: 64, seed }, stratified(seed, 16, 300)] {
            let quad = Quadrature::for_strategy(&strategy, &p, 6).unwrap();
            let lo = expectation(6, &quad, |t| Ok(b * f(t))).unwrap();
            let hi = expectation(6, &quad, |t| Ok(f(t))).unwrap();
            prop_assert!(lo.estimate <= hi.estimate + 1e-15);
        }
    }

    #[test]
    fn correlator_in_unit_interval(theta in 0.0f64..1.0, ell in 0i64..30) {
        let p = golden(2.5, theta);
        let es = solve(&p, Window::new(-20, 50).unwrap());
        let v = correlator_at(&es, ell).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }
}
