mod common;

use amolab_core::cocycle::transfer_step;
use amolab_core::localization::*;
use amolab_core::operator::Window;
use amolab_core::resonance::{default_k_cutoff, set_a, theta_sets, THETA2_FACTOR};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn l(lambda: f64) -> f64 {
    f64::ln(lambda)
}

#[test]
fn zero_distance_is_inapplicable() {
    let p = golden(3.0, 0.2);
    let es = solve(&p, Window::symmetric(100));
    let v = classify_and_verify(&es, &p, Probe::Relative(0), &DecayConfig::new(0.15 * l(3.0))).unwrap();
    assert!(v.iter().all(|v| v.outcome == Outcome::Inapplicable(Skip::ZeroDistance)));
    assert!(classify_and_verify(&es, &p, Probe::Relative(20), &DecayConfig::new(2.0)).is_err());
}

/// Recomputes each verdict from the raw eigenvector and the resonance scan.
fn recheck(es: &amolab_core::EigenSystem, p: &amolab_core::ModelParams, v: &DecayVerdict, eps: f64) {
    let d = (v.ell - v.center).abs();
    let phi = es.vector(v.s);
    let w = es.window();
    let sup = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ratio = phi[w.index_of(v.ell).unwrap()].abs() / sup;
    assert_eq!(ratio, v.ratio);
    let scan = (-2 * d..=2 * d)
        .map(|x| p.resonance_sine(2 * v.center + x))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(scan, v.sine);
    let rate = match v.case {
        DecayCase::OppositeSide => {
            assert!((v.ell - v.center) * v.x0 < 0);
            l(3.0) - eps
        }
        DecayCase::SameSide => {
            assert!((v.ell - v.center) * v.x0 >= 0);
            l(3.0) - eps - (-scan.ln() / d as f64).max(0.0)
        }
        DecayCase::CorollaryUniform => unreachable!(),
    };
    let bound = (-rate * d as f64).exp();
    assert!((bound - v.bound).abs() <= 1e-12 * bound);
    assert_eq!(v.passed(), ratio <= v.bound);
}

#[test]
fn decay_bound_suite() {
    let eps = 0.15 * l(3.0);
    let cfg = DecayConfig::new(eps);
    let (mut applicable, mut passed, mut opposite) = (0, 0, 0);
    for j in 0..12 {
        let p = golden(3.0, (j as f64 + 0.31) / 12.0);
        let es = solve(&p, Window::symmetric(300));
        for probe in [Probe::Relative(40), Probe::Relative(-40)] {
            for v in classify_and_verify(&es, &p, probe, &cfg).unwrap() {
                assert!(v.is_consistent());
                if v.is_applicable() {
                    recheck(&es, &p, &v, eps);
                    applicable += 1;
                    passed += v.passed() as usize;
                    opposite += (v.case == DecayCase::OppositeSide) as usize;
                } else {
                    assert!(matches!(
                        v.outcome,
                        Outcome::Inapplicable(Skip::NearEdge | Skip::BoundaryMass | Skip::ProbeOutsideWindow | Skip::EtaOutOfRange)
                    ));
                }
            }
        }
    }
    assert!(opposite > 0 && opposite < applicable);
    assert!(passed as f64 >= 0.95 * applicable as f64, "{passed}/{applicable}");
}

#[test]
fn corollary_suite_and_agreement() {
    let lam = 2.0;
    let eps = 0.15 * l(lam);
    let eta = 0.3 * l(lam);
    let cfg = DecayConfig::new(eps);
    let (mut applicable, mut passed) = (0, 0);
    for j in 0..8 {
        let p = golden(lam, (j as f64 + 0.17) / 8.0);
        let es = solve(&p, Window::symmetric(250));
        for d in [25, -25, 32, -32] {
            let cor = verify_corollary(&es, &p, Probe::Relative(d), eta, &cfg).unwrap();
            let thm = classify_and_verify(&es, &p, Probe::Relative(d), &cfg).unwrap();
            for (c, t) in cor.iter().zip(&thm) {
                assert!(c.is_consistent());
                if c.outcome == Outcome::Inapplicable(Skip::HypothesisUnmet) {
                    assert!(c.sine <= (-eta * d.abs() as f64).exp());
                }
                if c.is_applicable() {
                    applicable += 1;
                    passed += c.passed() as usize;
                    assert!(c.bound >= t.bound * (1.0 - 1e-12));
                    if t.is_applicable() {
                        assert!(!(t.passed() && !c.passed()), "s={}", c.s);
                    }
                }
            }
        }
    }
    assert!(passed as f64 >= 0.95 * applicable as f64, "{passed}/{applicable}");
}

#[test]
fn phases_outside_a_meet_the_hypothesis() {
    let lam = 2.0;
    let eta = 0.3 * l(lam);
    let mut cfg = DecayConfig::new(0.15 * l(lam));
    cfg.min_scale = 1;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = 0;
    for _ in 0..6 {
        let theta: f64 = rand::Rng::gen(&mut rng);
        let p = golden(lam, theta);
        let es = solve(&p, Window::symmetric(200));
        let v = verify_corollary(&es, &p, Probe::Absolute(0), eta, &cfg).unwrap();
        for v in v.iter().filter(|v| v.center.abs() >= 15 && v.center.abs() <= 60) {
            let a = set_a(eta, v.center, &p).unwrap();
            if !a.contains(theta) {
                seen += 1;
                assert_ne!(v.outcome, Outcome::Inapplicable(Skip::HypothesisUnmet), "n={}", v.center);
            }
        }
    }
    assert!(seen > 50);
}

#[test]
fn wronskian_of_two_solutions_is_constant() {
    let p = golden(2.5, 0.4);
    let w = Window::new(-30, 30).unwrap();
    let e = 0.77;
    let run = |a: f64, b: f64| {
        let mut f = vec![0.0; w.len()];
        f[0] = b;
        f[1] = a;
        for i in 1..w.len() - 1 {
            let t = transfer_step(e, &p, w.site(i));
            f[i + 1] = t[0][0] * f[i] + t[0][1] * f[i - 1];
        }
        f
    };
    // Short enough that neither solution grows past ~1e10.
    let f = run(1.0, 0.3);
    let g = run(-0.2, 1.0);
    let w0 = wronskian(&f, &g, w, -30).unwrap();
    for k in -30..30 {
        let wk = wronskian(&f, &g, w, k).unwrap();
        let scale = (f[(k + 31) as usize] * g[(k + 30) as usize]).abs().max(1.0);
        assert!((wk - w0).abs() <= 1e-10 * scale, "k={k}");
    }
}

fn resonant_phase(n: i64, j: i64) -> f64 {
    let ka = golden(2.0, 0.0).alpha.multiple(n).fract().to_f64();
    ((j as f64 - ka) / 2.0).rem_euclid(1.0)
}

#[test]
fn palindrome_at_exact_resonance() {
    let lam = 2.0;
    let gamma = 1.5 * l(lam);
    let eps = 0.1 * (gamma - l(lam));
    let eps2 = 0.2 * (gamma - l(lam));
    for j in [0, 1] {
        let p = golden(lam, resonant_phase(20, j));
        let es = solve(&p, Window::symmetric(200));
        let r = palindrome_check(&p, 20, gamma, eps, &es).unwrap();
        assert!(r.conclusion_fraction().unwrap() >= 0.9);
        assert!(r.wronskian_fraction(eps2).unwrap() >= 0.9);
        // Telescoping gives |V - V_hat| <= 4 lambda |sin|, up to rounding in V.
        assert!(r.potential_constant * (-gamma * 20.0).exp() <= 4.0 * lam * r.sine + 1e-13);
        for e in &r.entries {
            assert!(e.iota == 1 || e.iota == -1);
            assert!(e.increment_excess <= 1e-13, "s={} {}", e.s, e.increment_excess);
        }
    }
}

#[test]
fn palindrome_gates() {
    let lam = 2.0;
    let p = golden(lam, resonant_phase(12, 0));
    let es = solve(&p, Window::symmetric(80));
    let r = palindrome_check(&p, 12, l(lam), 0.0, &es).unwrap();
    assert_eq!(r.conclusion_factor, 1.0);
    assert_eq!(r.conclusion_fraction(), Some(1.0));
    assert!(palindrome_check(&p, 12, 2.5 * l(lam), 0.0, &es).is_err());
    let q = golden(lam, 0.1234);
    let es = solve(&q, Window::symmetric(80));
    assert!(matches!(
        palindrome_check(&q, 12, 1.5 * l(lam), 0.0, &es),
        Err(amolab_core::Error::HypothesisViolated { .. })
    ));
}

#[test]
fn prop_large_sums() {
    let lam = 2.0;
    let p = golden(lam, 0.3);
    let es = solve(&p, Window::symmetric(120));
    let full = verify_prop_large(&es, 1, 1000.0).unwrap();
    assert!((full.sum - 1.0).abs() < 1e-12);

    let n = 12;
    let gamma = 1.2 * l(lam);
    let ts = theta_sets(gamma, n, &p, default_k_cutoff(n), THETA2_FACTOR).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let thetas = ts.theta.sample(&mut rng, 20);
    let good = thetas
        .iter()
        .filter(|&&t| {
            let q = p.with_theta(t);
            let es = solve(&q, Window::symmetric(150));
            verify_prop_large(&es, n, 2.0).unwrap().at_least_half
        })
        .count();
    assert!(good as f64 >= 0.9 * thetas.len() as f64, "{good}");
}
