//! Phase sets where `|sin pi(2 theta + c)|` is small, as exact finite unions
//! of arcs of the circle `[0, 1)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::operator::ModelParams;
use crate::sum::Neumaier;

/// Outward rounding applied to every arc built from an arcsine.
pub const ENDPOINT_WIDENING: f64 = 1e-14;

/// Finite union of disjoint closed arcs `[a, b]` with `0 <= a < b <= 1`,
/// sorted and pairwise separated. Arcs crossing 0 are stored split.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    arcs: Vec<(f64, f64)>,
    measure: f64,
}

fn total(arcs: &[(f64, f64)]) -> f64 {
    let mut s = Neumaier::new();
    for &(a, b) in arcs {
        s.add(b);
        s.add(-a);
    }
    s.value()
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self::from_sorted(vec![(0.0, 1.0)])
    }

    fn from_sorted(arcs: Vec<(f64, f64)>) -> Self {
        let measure = total(&arcs);
        Self { arcs, measure }
    }

    /// Builds the union of arbitrary arcs `[a, b]` on the real line taken mod 1.
    /// Arcs of length at least 1 cover the circle; empty and reversed arcs are
    /// dropped.
    pub fn from_arcs<I: IntoIterator<Item = (f64, f64)>>(arcs: I) -> Self {
        let mut pieces = Vec::new();
        for (a, b) in arcs {
            if !(b > a) || !a.is_finite() || !b.is_finite() {
                continue;
            }
            if b - a >= 1.0 {
                return Self::full();
            }
            let s = a - a.floor();
            let e = s + (b - a);
            if e > 1.0 {
                pieces.push((s, 1.0));
                pieces.push((0.0, e - 1.0));
            } else {
                pieces.push((s, e));
            }
        }
        Self::merge(pieces)
    }

    fn merge(mut pieces: Vec<(f64, f64)>) -> Self {
        pieces.retain(|&(a, b)| b > a);
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self::from_sorted(out)
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Lebesgue measure, the compensated sum of the arc lengths.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = theta - theta.floor();
        let i = self.arcs.partition_point(|&(a, _)| a <= t);
        (i > 0 && t <= self.arcs[i - 1].1) || (t == 0.0 && self.arcs.last().is_some_and(|l| l.1 >= 1.0))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::merge(self.arcs.iter().chain(&other.arcs).copied().collect())
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.arcs.len() + 1);
        let mut prev = 0.0;
        for &(a, b) in &self.arcs {
            if a > prev {
                out.push((prev, a));
            }
            prev = b;
        }
        if prev < 1.0 {
            out.push((prev, 1.0));
        }
        Self::from_sorted(out)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (x, y) = (&self.arcs, &other.arcs);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < x.len() && j < y.len() {
            let a = x[i].0.max(y[j].0);
            let b = x[i].1.min(y[j].1);
            if b > a {
                out.push((a, b));
            }
            if x[i].1 < y[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_sorted(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.arcs.iter().all(|&(a, b)| {
            let i = other.arcs.partition_point(|&(c, _)| c <= a);
            i > 0 && other.arcs[i - 1].1 >= b
        })
    }

    /// Every arc grown by `delta` on both sides.
    pub fn widened(&self, delta: f64) -> Self {
        Self::from_arcs(self.arcs.iter().map(|&(a, b)| (a - delta, b + delta)))
    }

    /// Point at cumulative arc length `u * measure`.
    pub fn quantile(&self, u: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let mut target = u.clamp(0.0, 1.0) * self.measure;
        for &(a, b) in &self.arcs {
            let len = b - a;
            if target <= len {
                return Some((a + target).min(b));
            }
            target -= len;
        }
        self.arcs.last().map(|l| l.1)
    }

    /// `count` points drawn uniformly from the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        (0..count)
            .map(|_| self.quantile(rng.gen::<f64>()).expect("set is nonempty"))
            .collect()
    }

    /// One `a b` line per arc.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for &(a, b) in &self.arcs {
            writeln!(s, "{a:.16e} {b:.16e}").expect("writing to a string");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut arcs = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::invalid("arcs", format!("line {}: `{line}`", no + 1));
            let mut it = line.split_whitespace();
            let a: f64 = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let b: f64 = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() || !(0.0 <= a && a < b && b <= 1.0) {
                return Err(bad());
            }
            arcs.push((a, b));
        }
        for w in arcs.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::invalid("arcs", "arcs must be sorted and disjoint"));
            }
        }
        Ok(Self::from_sorted(arcs))
    }
}

/// The two arcs of `{theta : |sin pi(2 theta + c)| <= eps}` as raw intervals,
/// with `c` given mod 1. Empty for `eps <= 0`.
fn sublevel_arcs(c: DoubleDouble, eps: f64) -> Option<[(f64, f64); 2]> {
    if !(eps > 0.0) {
        return None;
    }
    if eps >= 1.0 {
        return Some([(0.0, 1.0), (0.0, 0.0)]);
    }
    // |sin pi x| <= eps iff ||x|| <= asin(eps) / pi, so theta lies within
    // half of that of a root of 2 theta + c.
    let half = eps.asin() / PI / 2.0;
    let root = (-(c.fract()) * DoubleDouble::HALF).fract().to_f64();
    let w = ENDPOINT_WIDENING;
    Some([
        (root - half - w, root + half + w),
        (root + 0.5 - half - w, root + 0.5 + half + w),
    ])
}

/// `{theta in [0, 1) : |sin pi(2 theta + c)| <= eps}`.
pub fn sine_sublevel(c: f64, eps: f64) -> IntervalSet {
    sine_sublevel_dd(DoubleDouble::from_f64(c), eps)
}

/// [`sine_sublevel`] with the shift in double-double precision.
pub fn sine_sublevel_dd(c: DoubleDouble, eps: f64) -> IntervalSet {
    IntervalSet::from_arcs(sublevel_arcs(c, eps).into_iter().flatten())
}

/// Union over `m in ms` of the sublevel sets with shift `c0 + m alpha`.
fn sublevel_union(params: &ModelParams, c0: DoubleDouble, ms: Vec<i64>, eps: f64) -> IntervalSet {
    let arcs: Vec<(f64, f64)> = ms
        .par_iter()
        .flat_map_iter(|&m| {
            let c = c0 + params.alpha.multiple(m);
            sublevel_arcs(c, eps).into_iter().flatten()
        })
        .collect();
    IntervalSet::from_arcs(arcs)
}

fn sublevel_shift(params: &ModelParams, ms: Vec<i64>, eps: f64) -> IntervalSet {
    sublevel_union(params, DoubleDouble::ZERO, ms, eps)
}

/// `A_{eta;n}`: phases with `min_{|n'| <= 10|n|} |sin pi(2 theta + alpha(2n + n'))| <= e^{-eta|n|}`.
pub fn set_a(eta: f64, n: i64, params: &ModelParams) -> Result<IntervalSet> {
    set_b(eta, n, 0, params)
}

/// `B_{eta;n;l}`: as [`set_a`] with `|n - l|` in place of `|n|` for the range
/// and the threshold.
pub fn set_b(eta: f64, n: i64, ell: i64, params: &ModelParams) -> Result<IntervalSet> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if n == ell {
        return Err(Error::invalid("n", format!("must differ from {ell}")));
    }
    let d = (n - ell).abs();
    let ms = b_multiples(n, ell).collect();
    Ok(sublevel_shift(params, ms, (-eta * d as f64).exp()))
}

/// The measure bound `(20 d + 1) e^{-eta d}`.
pub fn set_measure_bound(eta: f64, d: i64) -> f64 {
    (20 * d.abs() + 1) as f64 * (-eta * d.abs() as f64).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSets {
    pub theta1: IntervalSet,
    pub theta2: IntervalSet,
    pub theta: IntervalSet,
    pub k_min: i64,
    pub k_cutoff: i64,
    /// Bound on the measure of the omitted part of `theta2`.
    pub tail_bound: f64,
    /// `|theta| - tail_bound`.
    pub measure_lower: f64,
}

pub const THETA2_FACTOR: i64 = 1000;

pub fn default_k_cutoff(n: i64) -> i64 {
    (100_000).max(2000 * n.abs())
}

/// `theta1`: `e^{-2 Gamma|n|} <= |sin pi(2 theta + n alpha)| <= e^{-Gamma|n|}`.
/// `theta2`: some `factor|n| <= |k| <= k_cutoff` with
/// `|sin pi(2 theta + k alpha)| <= e^{-L|k|/100}`.
pub fn theta_sets(gamma: f64, n: i64, params: &ModelParams, k_cutoff: i64, factor: i64) -> Result<ThetaSets> {
    let l = params.lyapunov();
    if !(gamma > l && gamma <= 2.0 * l) {
        return Err(Error::invalid("gamma", format!("{gamma} outside ({l}, {}]", 2.0 * l)));
    }
    if n == 0 || factor < 1 {
        return Err(Error::invalid("n", "need n != 0 and a positive factor"));
    }
    let na = n.abs();
    let k_min = factor * na;
    if k_cutoff < k_min {
        return Err(Error::invalid("k_cutoff", format!("below {k_min}")));
    }
    let c = params.alpha.multiple(n);
    let outer = sine_sublevel_dd(c, (-gamma * na as f64).exp());
    // The inner set is removed, so it is shrunk rather than widened.
    let inner = sine_sublevel_dd(c, (-2.0 * gamma * na as f64).exp()).widened(-2.0 * ENDPOINT_WIDENING);
    let theta1 = outer.difference(&inner);

    let arcs: Vec<(f64, f64)> = (k_min..=k_cutoff)
        .into_par_iter()
        .flat_map_iter(|k| {
            let eps = (-l * k as f64 / 100.0).exp();
            [k, -k].into_iter().flat_map(move |kk| {
                sublevel_arcs(params.alpha.multiple(kk), eps).into_iter().flatten()
            })
        })
        .collect();
    let theta2 = IntervalSet::from_arcs(arcs);
    let theta = theta1.difference(&theta2);

    // Per k the two arcs have total measure 2 (2/pi) asin(eps) <= 2 eps.
    let q = (-l / 100.0).exp();
    let tail_bound = 2.0 * q.powf((k_cutoff + 1) as f64) / (1.0 - q);
    let measure_lower = theta.measure() - tail_bound;
    Ok(ThetaSets {
        theta1,
        theta2,
        theta,
        k_min,
        k_cutoff,
        tail_bound,
        measure_lower,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub x0: i64,
    pub value: f64,
    /// Another site attains the minimum to within [`TIE_TOLERANCE`].
    pub degenerate: bool,
}

pub const TIE_TOLERANCE: f64 = 1e-12;

/// `argmin_{|x| <= radius} |sin pi(2 theta + alpha(2 center + x))|`, preferring
/// the smallest `|x|` and then the smaller `x`.
pub fn resonance_locator(theta: f64, center: i64, radius: u64, params: &ModelParams) -> Result<Resonance> {
    if radius < 1 {
        return Err(Error::invalid("radius", "must be at least 1"));
    }
    let p = params.with_theta(theta);
    let r = radius as i64;
    let value_at = |x: i64| p.resonance_sine(2 * center + x);
    let mut best = (0, value_at(0));
    let mut values = Vec::with_capacity(2 * radius as usize + 1);
    values.push(best);
    for d in 1..=r {
        for x in [-d, d] {
            let v = value_at(x);
            values.push((x, v));
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    let degenerate = values
        .iter()
        .any(|&(x, v)| x != best.0 && (v - best.1).abs() <= TIE_TOLERANCE);
    Ok(Resonance {
        x0: best.0,
        value: best.1,
        degenerate,
    })
}

/// `g(theta) = min_m |sin pi(2 theta + c_m)|` for a finite family of shifts,
/// evaluated by locating the nearest root rather than through arcs.
#[derive(Clone, Debug)]
pub struct MinSine {
    roots: Vec<f64>,
}

impl MinSine {
    pub fn new(shifts: impl IntoIterator<Item = DoubleDouble>) -> Self {
        // Roots of 2 theta + c in the doubled variable x = 2 theta mod 1.
        let mut roots: Vec<f64> = shifts.into_iter().map(|c| (-c).fract().to_f64() % 1.0).collect();
        roots.sort_by(f64::total_cmp);
        Self { roots }
    }

    /// Shifts `alpha m` for each `m`.
    pub fn for_multiples(params: &ModelParams, ms: impl IntoIterator<Item = i64>) -> Self {
        Self::new(ms.into_iter().map(|m| params.alpha.multiple(m)))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let x = (2.0 * theta).rem_euclid(1.0);
        let n = self.roots.len();
        if n == 0 {
            return 1.0;
        }
        let i = self.roots.partition_point(|&r| r < x);
        let mut d = f64::INFINITY;
        for j in [i + n - 1, i] {
            let r = self.roots[j % n];
            let t = (x - r).abs();
            d = d.min(t.min(1.0 - t));
        }
        (PI * d).sin()
    }
}

/// Measure of `{theta in [0, 1) : g(theta) <= level}` from an `n_grid`-cell
/// grid, refining cells where the Lipschitz bound cannot decide membership.
pub fn certified_sublevel_measure<G>(g: G, lipschitz: f64, level: f64, n_grid: usize) -> f64
where
    G: Fn(f64) -> f64 + Sync,
{
    const MIN_CELL: f64 = 1e-17;
    fn cell<G: Fn(f64) -> f64>(g: &G, lip: f64, level: f64, a: f64, h: f64) -> f64 {
        let v = g(a + h / 2.0);
        let slack = lip * h / 2.0;
        if v + slack <= level {
            h
        } else if v - slack > level {
            0.0
        } else if h < MIN_CELL {
            h / 2.0
        } else {
            cell(g, lip, level, a, h / 2.0) + cell(g, lip, level, a + h / 2.0, h / 2.0)
        }
    }
    let h = 1.0 / n_grid as f64;
    const CHUNK: usize = 1 << 14;
    let parts: Vec<f64> = (0..n_grid.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = Neumaier::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_grid) {
                s.add(cell(&g, lipschitz, level, i as f64 * h, h));
            }
            s.value()
        })
        .collect();
    crate::sum::sum(parts)
}

/// Fraction of `n_grid` midpoints with `g <= level`.
pub fn grid_sublevel_fraction<G>(g: G, level: f64, n_grid: usize) -> f64
where
    G: Fn(f64) -> f64 + Sync,
{
    let hits: usize = (0..n_grid)
        .into_par_iter()
        .filter(|&i| g((i as f64 + 0.5) / n_grid as f64) <= level)
        .count();
    hits as f64 / n_grid as f64
}

/// Shifts `2n + n'` for `|n'| <= 10 |n - ell|`, the index family of the B sets.
pub fn b_multiples(n: i64, ell: i64) -> impl Iterator<Item = i64> {
    let d = (n - ell).abs();
    (-10 * d..=10 * d).map(move |np| 2 * n + np)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sublevel_extremes() {
        assert_eq!(sine_sublevel(0.3, 1.0).measure(), 1.0);
        assert!(sine_sublevel(0.3, 0.0).is_empty());
        let s = sine_sublevel(0.0, (0.1 * PI).sin());
        assert!((s.measure() - 0.2).abs() < 1e-13);
        assert!(s.contains(0.0) && s.contains(0.5) && s.contains(0.95));
        assert!(!s.contains(0.25));
    }

    #[test]
    fn wrapping_arcs_split() {
        let s = IntervalSet::from_arcs([(0.9, 1.2)]);
        assert_eq!(s.arcs().len(), 2);
        assert!((s.measure() - 0.3).abs() < 1e-15);
        assert!(s.contains(0.05) && s.contains(0.95) && !s.contains(0.5));
    }

    #[test]
    fn algebra() {
        let a = IntervalSet::from_arcs([(0.1, 0.4), (0.6, 0.7)]);
        let b = IntervalSet::from_arcs([(0.3, 0.65)]);
        let u = a.union(&b);
        assert_eq!(u.arcs(), &[(0.1, 0.7)]);
        let i = a.intersection(&b);
        assert_eq!(i.arcs(), &[(0.3, 0.4), (0.6, 0.65)]);
        let d = a.difference(&b);
        assert_eq!(d.arcs(), &[(0.1, 0.3), (0.65, 0.7)]);
        assert!((a.measure() + a.complement().measure() - 1.0).abs() < 1e-16);
        assert!(i.is_subset_of(&a) && !a.is_subset_of(&b));
    }

    #[test]
    fn text_round_trip() {
        let a = IntervalSet::from_arcs([(0.1, 0.4), (0.6, 1.0 / 3.0 + 0.5)]);
        let b = IntervalSet::from_text(&a.to_text()).unwrap();
        assert_eq!(a, b);
        assert!(IntervalSet::from_text("0.5 0.2\n").is_err());
        assert!(IntervalSet::from_text("0.1 0.3\n0.2 0.4\n").is_err());
    }

    #[test]
    fn quantile_hits_arcs() {
        let a = IntervalSet::from_arcs([(0.1, 0.2), (0.5, 0.8)]);
        assert_eq!(a.quantile(0.0), Some(0.1));
        assert!((a.quantile(0.25).unwrap() - 0.2).abs() < 1e-15);
        assert!((a.quantile(0.5).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(IntervalSet::empty().quantile(0.3), None);
    }
}
