//! Per-eigenfunction checks of the decay bounds away from the localization
//! center, and of the palindromic near-symmetry at resonant phases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{potential, EigenSystem, ModelParams, Window};
use crate::resonance::resonance_locator;

pub use crate::operator::window_max;

/// Where the decay is probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "site", rename_all = "snake_case")]
pub enum Probe {
    Absolute(i64),
    /// `l = n_s + offset` for each eigenfunction.
    Relative(i64),
}

impl Probe {
    pub fn site(&self, center: i64) -> i64 {
        match *self {
            Probe::Absolute(l) => l,
            Probe::Relative(d) => center + d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub epsilon: f64,
    pub min_scale: u64,
    pub max_boundary_mass: f64,
    /// Centers closer than this fraction of the window length to an edge are
    /// excluded.
    pub edge_fraction: f64,
}

impl DecayConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            min_scale: 15,
            max_boundary_mass: 1e-8,
            edge_fraction: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayCase {
    OppositeSide,
    SameSide,
    CorollaryUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skip {
    ZeroDistance,
    BelowMinScale,
    BoundaryMass,
    NearEdge,
    ProbeOutsideWindow,
    /// The resonance exponent is not below `L - eps`.
    EtaOutOfRange,
    HypothesisUnmet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inapplicable(Skip),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayVerdict {
    pub s: usize,
    pub center: i64,
    pub ell: i64,
    /// Offset from `2 n_s` of the strongest resonance within `2|l - n_s|`.
    pub x0: i64,
    pub sine: f64,
    pub case: DecayCase,
    /// Exponent used in the bound.
    pub eta: f64,
    pub bound: f64,
    /// `|phi(l)| / |phi(n_s)|`.
    pub ratio: f64,
    pub outcome: Outcome,
    pub boundary_mass: f64,
}

impl DecayVerdict {
    pub fn is_applicable(&self) -> bool {
        !matches!(self.outcome, Outcome::Inapplicable(_))
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// The pass flag agrees with the recorded inequality.
    pub fn is_consistent(&self) -> bool {
        match self.outcome {
            Outcome::Pass => self.ratio <= self.bound,
            Outcome::Fail => self.ratio > self.bound,
            Outcome::Inapplicable(_) => true,
        }
    }
}

struct Prepared {
    verdict: DecayVerdict,
    distance: f64,
}

fn prepare(es: &EigenSystem, params: &ModelParams, s: usize, probe: Probe, cfg: &DecayConfig, case: DecayCase) -> Result<std::result::Result<Prepared, DecayVerdict>> {
    let l = params.lyapunov();
    if !(cfg.epsilon > 0.0 && cfg.epsilon < l) {
        return Err(Error::invalid("epsilon", format!("{} outside (0, {l})", cfg.epsilon)));
    }
    let w = es.window();
    let meta = es.meta(s);
    let center = meta.center;
    let ell = probe.site(center);
    let d = (ell - center).unsigned_abs();
    let mut v = DecayVerdict {
        s,
        center,
        ell,
        x0: 0,
        sine: f64::NAN,
        case,
        eta: f64::NAN,
        bound: f64::NAN,
        ratio: f64::NAN,
        outcome: Outcome::Inapplicable(Skip::ZeroDistance),
        boundary_mass: meta.boundary_mass,
    };
    let edge = cfg.edge_fraction * w.len() as f64;
    let skip = if d == 0 {
        Some(Skip::ZeroDistance)
    } else if d < cfg.min_scale {
        Some(Skip::BelowMinScale)
    } else if !(meta.boundary_mass < cfg.max_boundary_mass) {
        Some(Skip::BoundaryMass)
    } else if ((center - w.lo()) as f64) < edge || ((w.hi() - center) as f64) < edge {
        Some(Skip::NearEdge)
    } else if !w.contains(ell) {
        Some(Skip::ProbeOutsideWindow)
    } else {
        None
    };
    if let Some(k) = skip {
        v.outcome = Outcome::Inapplicable(k);
        return Ok(Err(v));
    }
    let res = resonance_locator(params.theta, center, 2 * d, params)?;
    v.x0 = res.x0;
    v.sine = res.value;
    v.ratio = es.amplitude(s, ell).expect("probe inside window").abs() / meta.sup_norm;
    Ok(Ok(Prepared {
        verdict: v,
        distance: d as f64,
    }))
}

fn judge(mut v: DecayVerdict, rate: f64, distance: f64) -> DecayVerdict {
    v.bound = (-rate * distance).exp();
    v.outcome = if v.ratio <= v.bound { Outcome::Pass } else { Outcome::Fail };
    v
}

/// The two-case decay bound at probe `l` for one eigenfunction.
///
/// With `d = |l - n_s|` and `x0` the strongest resonance offset, the opposite
/// side case `(l - n_s) x0 < 0` is held to `e^{-(L - eps) d}`. Otherwise the
/// bound is `e^{-(L - eps - eta) d}` with `eta = max(0, -ln|sin| / d)`, and the
/// verdict is inapplicable when `eta >= L - eps`.
pub fn verify_decay(es: &EigenSystem, params: &ModelParams, s: usize, probe: Probe, cfg: &DecayConfig) -> Result<DecayVerdict> {
    let p = match prepare(es, params, s, probe, cfg, DecayCase::SameSide)? {
        Ok(p) => p,
        Err(v) => return Ok(v),
    };
    let mut v = p.verdict;
    let l = params.lyapunov();
    let side = (v.ell - v.center).signum() * v.x0.signum();
    if side < 0 {
        v.case = DecayCase::OppositeSide;
        v.eta = 0.0;
        return Ok(judge(v, l - cfg.epsilon, p.distance));
    }
    let eta = (-v.sine.ln() / p.distance).max(0.0);
    v.eta = eta;
    if eta >= l - cfg.epsilon {
        v.outcome = Outcome::Inapplicable(Skip::EtaOutOfRange);
        return Ok(v);
    }
    Ok(judge(v, l - cfg.epsilon - eta, p.distance))
}

/// [`verify_decay`] over all eigenfunctions, in index order.
pub fn classify_and_verify(es: &EigenSystem, params: &ModelParams, probe: Probe, cfg: &DecayConfig) -> Result<Vec<DecayVerdict>> {
    (0..es.len())
        .into_par_iter()
        .map(|s| verify_decay(es, params, s, probe, cfg))
        .collect()
}

/// Uniform bound `e^{-(L - eta - eps) d}` under the hypothesis that every
/// resonance within `2d` has `|sin| > e^{-eta d}`; inapplicable otherwise.
pub fn verify_corollary(es: &EigenSystem, params: &ModelParams, probe: Probe, eta: f64, cfg: &DecayConfig) -> Result<Vec<DecayVerdict>> {
    let l = params.lyapunov();
    if !(eta > 0.0 && eta < l - cfg.epsilon) {
        return Err(Error::invalid("eta", format!("{eta} outside (0, L - eps)")));
    }
    (0..es.len())
        .into_par_iter()
        .map(|s| {
            let p = match prepare(es, params, s, probe, cfg, DecayCase::CorollaryUniform)? {
                Ok(p) => p,
                Err(v) => return Ok(v),
            };
            let mut v = p.verdict;
            v.eta = eta;
            if !(v.sine > (-eta * p.distance).exp()) {
                v.outcome = Outcome::Inapplicable(Skip::HypothesisUnmet);
                return Ok(v);
            }
            Ok(judge(v, l - eta - cfg.epsilon, p.distance))
        })
        .collect()
}

/// Applicable and passing counts.
pub fn tally(verdicts: &[DecayVerdict]) -> (usize, usize) {
    verdicts.iter().fold((0, 0), |(a, p), v| {
        (a + v.is_applicable() as usize, p + v.passed() as usize)
    })
}

/// `f(k+1) g(k) - f(k) g(k+1)` for sequences on a common window.
pub fn wronskian(f: &[f64], g: &[f64], window: Window, k: i64) -> Result<f64> {
    if f.len() != window.len() || g.len() != window.len() {
        return Err(Error::invalid("sequence", "length differs from window"));
    }
    let i = window.check(k)?;
    let j = window.check(k + 1)?;
    Ok(f[j] * g[i] - f[i] * g[j])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PalindromeEntry {
    pub s: usize,
    pub center: i64,
    pub sup_norm: f64,
    /// `|phi(n) - phi(0)|`.
    pub diff_minus: f64,
    /// `|phi(n) + phi(0)|`.
    pub diff_plus: f64,
    /// `+1` when `|phi(n) + phi(0)|` is the smaller, `-1` otherwise.
    pub iota: i8,
    /// Largest `|W(phi, phi_hat)(k)|` over the overlap of both domains.
    pub wronskian_max: f64,
    /// Largest `|W(k) - W(k-1)| / (A^2 e^{-Gamma n})`.
    pub increment_constant: f64,
    /// Largest `|W(k) - W(k-1)| - C e^{-Gamma n} |phi(k) phi_hat(k)|` with `C`
    /// the report's potential constant, relative to `A^2`.
    pub increment_excess: f64,
    pub interior: bool,
}

impl PalindromeEntry {
    pub fn min_diff(&self) -> f64 {
        self.diff_minus.min(self.diff_plus)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PalindromeReport {
    pub n: i64,
    pub gamma: f64,
    pub epsilon: f64,
    pub sine: f64,
    /// `max_k |V(k) - V_hat(k)| e^{Gamma n}` over the overlap.
    pub potential_constant: f64,
    /// `e^{-(Gamma - L - eps)|n| / 2}`, the relative bound on `|phi(n) -+ phi(0)|`.
    pub conclusion_factor: f64,
    /// `e^{-(Gamma - eps)|n|}`, the relative bound on the Wronskian.
    pub wronskian_factor: f64,
    pub entries: Vec<PalindromeEntry>,
}

impl PalindromeReport {
    /// Fraction of interior eigenfunctions meeting the sign-minimized bound.
    pub fn conclusion_fraction(&self) -> Option<f64> {
        self.fraction(|e| e.min_diff() <= self.conclusion_factor * e.sup_norm)
    }

    /// Fraction of interior eigenfunctions whose Wronskian profile stays below
    /// `A^2 e^{-(Gamma - eps') n}`.
    pub fn wronskian_fraction(&self, eps_prime: f64) -> Option<f64> {
        let f = (-(self.gamma - eps_prime) * self.n.abs() as f64).exp();
        self.fraction(|e| e.wronskian_max <= f * e.sup_norm * e.sup_norm)
    }

    fn fraction(&self, ok: impl Fn(&PalindromeEntry) -> bool) -> Option<f64> {
        let interior: Vec<_> = self.entries.iter().filter(|e| e.interior).collect();
        (!interior.is_empty()).then(|| interior.iter().filter(|e| ok(e)).count() as f64 / interior.len() as f64)
    }
}

/// Compares each eigenfunction with its reflection `phi_hat(k) = phi(n - k)`
/// at a phase resonant at `n`.
///
/// Rejects `Gamma` outside `[L, 2L]` and phases with
/// `|sin pi(2 theta + n alpha)| > e^{-Gamma|n|}`. `Gamma = L` is accepted and
/// makes the conclusion trivially true.
pub fn palindrome_check(params: &ModelParams, n: i64, gamma: f64, epsilon: f64, es: &EigenSystem) -> Result<PalindromeReport> {
    let l = params.lyapunov();
    if !(gamma >= l && gamma <= 2.0 * l) || l == 0.0 {
        return Err(Error::invalid("gamma", format!("{gamma} outside [{l}, {}]", 2.0 * l)));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be nonzero"));
    }
    let na = n.abs() as f64;
    let sine = params.resonance_sine(n);
    let threshold = (-gamma * na).exp();
    if !(sine <= threshold) {
        return Err(Error::HypothesisViolated { sine, threshold });
    }
    let w = es.window();
    if !(w.contains(0) && w.contains(n)) {
        return Err(Error::OutOfWindow {
            site: if w.contains(0) { n } else { 0 },
            lo: w.lo(),
            hi: w.hi(),
        });
    }
    // phi_hat lives on [n - hi, n - lo]; compare on the overlap.
    let lo = w.lo().max(n - w.hi());
    let hi = w.hi().min(n - w.lo());
    let decay = (-gamma * na).exp();
    let dv: Vec<f64> = (lo..=hi)
        .map(|k| (potential(params, k) - potential(params, n - k)).abs())
        .collect();
    let potential_constant = dv.iter().fold(0.0f64, |m, &x| m.max(x)) / decay;
    let edge = 0.1 * w.len() as f64;

    let entries = (0..es.len())
        .into_par_iter()
        .map(|s| {
            let phi = es.vector(s);
            let at = |k: i64| phi[(k - w.lo()) as usize];
            let hat = |k: i64| at(n - k);
            let wr = |k: i64| at(k + 1) * hat(k) - at(k) * hat(k + 1);
            let wmax = (lo..hi).map(|k| wr(k).abs()).fold(0.0, f64::max);
            let meta = es.meta(s);
            let a2 = meta.sup_norm * meta.sup_norm;
            let (mut inc_max, mut excess) = (0.0f64, f64::NEG_INFINITY);
            for k in lo + 1..hi {
                let inc = (wr(k) - wr(k - 1)).abs();
                inc_max = inc_max.max(inc);
                let allowed = potential_constant * decay * (at(k) * hat(k)).abs();
                excess = excess.max((inc - allowed) / a2);
            }
            let (a, b) = (at(n), at(0));
            let (dm, dp) = ((a - b).abs(), (a + b).abs());
            PalindromeEntry {
                s,
                center: meta.center,
                sup_norm: meta.sup_norm,
                diff_minus: dm,
                diff_plus: dp,
                iota: if dp < dm { 1 } else { -1 },
                wronskian_max: wmax,
                increment_constant: inc_max / (a2 * decay),
                increment_excess: excess,
                interior: ((meta.center - w.lo()) as f64) >= edge && ((w.hi() - meta.center) as f64) >= edge,
            }
        })
        .collect();
    Ok(PalindromeReport {
        n,
        gamma,
        epsilon,
        sine,
        potential_constant,
        conclusion_factor: (-0.5 * (gamma - l - epsilon) * na).exp().min(1.0),
        wronskian_factor: (-(gamma - epsilon) * na).exp(),
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeMass {
    pub sum: f64,
    pub at_least_half: bool,
}

/// `sum over s with |n_s| <= c_win |n| of |phi_s(0)|^2`.
pub fn verify_prop_large(es: &EigenSystem, n: i64, c_win: f64) -> Result<LargeMass> {
    let w = es.window();
    let i0 = w.check(0)?;
    let radius = c_win * n.abs() as f64;
    let mut acc = crate::sum::Neumaier::new();
    for s in 0..es.len() {
        if (es.meta(s).center.abs() as f64) <= radius {
            let v = es.vector(s)[i0];
            acc.add(v * v);
        }
    }
    let sum = acc.value();
    Ok(LargeMass {
        sum,
        at_least_half: sum >= 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wronskian_examples() {
        let w = Window::new(-3, 3).unwrap();
        let f: Vec<f64> = w.sites().map(|k| k as f64).collect();
        let g = vec![1.0; w.len()];
        assert_eq!(wronskian(&f, &f, w, 0).unwrap(), 0.0);
        assert_eq!(wronskian(&f, &g, w, -2).unwrap(), 1.0);
        assert!(wronskian(&f, &g, w, 3).is_err());
    }

    #[test]
    fn probe_sites() {
        assert_eq!(Probe::Relative(40).site(-3), 37);
        assert_eq!(Probe::Absolute(5).site(100), 5);
    }
}
