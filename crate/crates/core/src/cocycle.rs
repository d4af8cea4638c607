//! Transfer matrices of the eigenvalue equation and checks of the growth and
//! block-decay estimates for solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{potential, window_max, ModelParams, Window};
use crate::resonance::resonance_locator;
use crate::sum::Neumaier;

/// A 2x2 real matrix as rows.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn max_abs(m: &Mat2) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Largest singular value of a 2x2 matrix.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let s = max_abs(m);
    if s == 0.0 {
        return 0.0;
    }
    let [[a, b], [c, d]] = m.map(|r| r.map(|x| x / s));
    let f2 = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = ((f2 - 2.0 * det) * (f2 + 2.0 * det)).max(0.0);
    s * ((f2 + disc.sqrt()) / 2.0).sqrt()
}

/// A 2x2 matrix `e^{a} Q [[1, u], [0, w]]` with `Q` a rotation and
/// `w = sign * e^{b - a}`.
///
/// Products of unimodular matrices stay well conditioned in this form: `a`
/// and `b` absorb the growth and decay, and the determinant is
/// `sign * e^{a + b}` without cancellation.
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    cos: f64,
    sin: f64,
    u: f64,
    a: Neumaier,
    b: Neumaier,
    sign: f64,
}

impl Default for ScaledMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl ScaledMatrix {
    pub fn identity() -> Self {
        Self {
            cos: 1.0,
            sin: 0.0,
            u: 0.0,
            a: Neumaier::new(),
            b: Neumaier::new(),
            sign: 1.0,
        }
    }

    pub fn from_matrix(m: &Mat2) -> Result<Self> {
        let mut s = Self::identity();
        s.left_mul(m)?;
        Ok(s)
    }

    fn w(&self) -> f64 {
        self.sign * (self.b.value() - self.a.value()).exp()
    }

    /// Replaces `M` by `x M`.
    pub fn left_mul(&mut self, x: &Mat2) -> Result<()> {
        let (c, s) = (self.cos, self.sin);
        // X Q
        let y00 = x[0][0] * c + x[0][1] * s;
        let y10 = x[1][0] * c + x[1][1] * s;
        let y01 = -x[0][0] * s + x[0][1] * c;
        let y11 = -x[1][0] * s + x[1][1] * c;
        let r1 = y00.hypot(y10);
        if !(r1 > 0.0 && r1.is_finite()) {
            return Err(Error::invalid("matrix", "singular or non-finite factor"));
        }
        let (c2, s2) = (y00 / r1, y10 / r1);
        let r12 = c2 * y01 + s2 * y11;
        let r2 = -s2 * y01 + c2 * y11;
        if r2 == 0.0 || !r2.is_finite() {
            return Err(Error::invalid("matrix", "singular or non-finite factor"));
        }
        let w = self.w();
        self.u += r12 / r1 * w;
        self.a.add(r1.ln());
        self.b.add(r2.abs().ln());
        if r2 < 0.0 {
            self.sign = -self.sign;
        }
        self.cos = c2;
        self.sin = s2;
        Ok(())
    }

    fn unscaled(&self) -> Mat2 {
        let (c, s, u, w) = (self.cos, self.sin, self.u, self.w());
        [[c, c * u - s * w], [s, s * u + c * w]]
    }

    /// Normalized matrix with max-norm 1.
    pub fn m(&self) -> Mat2 {
        let r = self.unscaled();
        let s = max_abs(&r);
        r.map(|row| row.map(|x| x / s))
    }

    /// Natural log of the factor extracted from [`Self::m`].
    pub fn log_scale(&self) -> f64 {
        self.a.value() + max_abs(&self.unscaled()).ln()
    }

    /// Determinant of the represented matrix.
    pub fn det(&self) -> f64 {
        self.sign * (self.a.value() + self.b.value()).exp()
    }

    pub fn log_abs_det(&self) -> f64 {
        self.a.value() + self.b.value()
    }

    /// `ln` of the spectral norm of the represented matrix.
    pub fn ln_norm(&self) -> f64 {
        let (u, w) = (self.u, self.w());
        self.a.value() + spectral_norm(&[[1.0, u], [0.0, w]]).ln()
    }

    /// The represented matrix, which may overflow.
    pub fn to_matrix(&self) -> Mat2 {
        let e = self.a.value().exp();
        self.unscaled().map(|row| row.map(|x| x * e))
    }

    /// `ln |M v|` for a vector `v`.
    pub fn ln_norm_apply(&self, v: [f64; 2]) -> f64 {
        let w = self.w();
        let r = [v[0] + self.u * v[1], w * v[1]];
        self.a.value() + r[0].hypot(r[1]).ln()
    }
}

/// `(phi(y), phi(y - 1))` at position `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UVector {
    pub y: i64,
    pub v: [f64; 2],
}

impl UVector {
    pub fn from_sequence(phi: &[f64], window: Window, y: i64) -> Result<Self> {
        let i = window.check(y)?;
        let j = window.check(y - 1)?;
        Ok(Self {
            y,
            v: [phi[i], phi[j]],
        })
    }

    pub fn norm(&self) -> f64 {
        self.v[0].hypot(self.v[1])
    }
}

/// One-step map sending `U(k)` to `U(k + 1)`.
pub fn transfer_step(energy: f64, params: &ModelParams, k: i64) -> Mat2 {
    step_matrix(energy, potential(params, k))
}

fn step_matrix(energy: f64, v: f64) -> Mat2 {
    [[energy - v, -1.0], [1.0, 0.0]]
}

fn product_over(energy: f64, potentials: &[f64]) -> ScaledMatrix {
    let mut m = ScaledMatrix::identity();
    for &v in potentials {
        m.left_mul(&step_matrix(energy, v))
            .expect("transfer matrices are unimodular");
    }
    m
}

/// Product of the one-step maps over sites `from..to`, latest on the left.
pub fn transfer_product(energy: f64, params: &ModelParams, from: i64, to: i64) -> Result<ScaledMatrix> {
    if from > to {
        return Err(Error::invalid("range", format!("from {from} exceeds to {to}")));
    }
    if !energy.is_finite() {
        return Err(Error::invalid("energy", "must be finite"));
    }
    let mut m = ScaledMatrix::identity();
    for k in from..to {
        m.left_mul(&transfer_step(energy, params, k))?;
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub n_steps: u64,
    /// `ln ||T_n|| / n`.
    pub value: f64,
    /// `(ln ||T_n|| - ln ||T_{n/2}||) / (n - n/2)`.
    pub tail: f64,
}

impl LyapunovEstimate {
    /// Gap between the full and tail estimates.
    pub fn spread(&self) -> f64 {
        (self.value - self.tail).abs()
    }
}

pub const MIN_LYAPUNOV_STEPS: u64 = 1000;

fn estimate_from(energy: f64, potentials: &[f64]) -> LyapunovEstimate {
    let n = potentials.len();
    let half = n / 2;
    let mut m = product_over(energy, &potentials[..half]);
    let ln_half = m.ln_norm();
    for &v in &potentials[half..] {
        m.left_mul(&step_matrix(energy, v))
            .expect("transfer matrices are unimodular");
    }
    let ln_full = m.ln_norm();
    LyapunovEstimate {
        energy,
        n_steps: n as u64,
        value: ln_full / n as f64,
        tail: (ln_full - ln_half) / (n - half) as f64,
    }
}

fn orbit(params: &ModelParams, n_steps: u64) -> Result<Vec<f64>> {
    if n_steps < MIN_LYAPUNOV_STEPS {
        return Err(Error::invalid("n_steps", format!("{n_steps} < {MIN_LYAPUNOV_STEPS}")));
    }
    Ok((0..n_steps as i64).map(|k| potential(params, k)).collect())
}

/// Growth rate of the transfer-matrix product over sites `0..n_steps`.
pub fn lyapunov_estimate(energy: f64, params: &ModelParams, n_steps: u64) -> Result<LyapunovEstimate> {
    if !energy.is_finite() {
        return Err(Error::invalid("energy", "must be finite"));
    }
    Ok(estimate_from(energy, &orbit(params, n_steps)?))
}

/// [`lyapunov_estimate`] for many energies sharing one orbit, in input order.
pub fn lyapunov_grid(energies: &[f64], params: &ModelParams, n_steps: u64) -> Result<Vec<LyapunovEstimate>> {
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("energy", "must be finite"));
    }
    let v = orbit(params, n_steps)?;
    Ok(energies.par_iter().map(|&e| estimate_from(e, &v)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub pairs: usize,
    /// Smallest `C` with `||U(k1)|| <= C e^{(L+eps)|k1-k2|} ||U(k2)||` for all
    /// scanned ordered pairs, so that also
    /// `C^{-1} e^{-(L+eps)|k1-k2|} ||U(k2)|| <= ||U(k1)||`.
    pub constant: f64,
    /// Pair attaining `constant`.
    pub worst_pair: Option<(i64, i64)>,
    /// Set when `constant` exceeds the cap.
    pub violation: Option<(i64, i64)>,
}

pub const GROWTH_MIN_SEPARATION: i64 = 20;

/// Scans all pairs of positions at distance at least
/// [`GROWTH_MIN_SEPARATION`] for the two-sided growth estimate.
pub fn growth_bound_check(phi: &[f64], window: Window, lyapunov: f64, epsilon: f64, cap: f64) -> Result<GrowthReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    if phi.len() != window.len() {
        return Err(Error::invalid("phi", "length differs from window"));
    }
    let rate = lyapunov + epsilon;
    let ys: Vec<i64> = (window.lo() + 1..=window.hi()).collect();
    let ln_norms: Vec<f64> = ys
        .iter()
        .map(|&y| UVector::from_sequence(phi, window, y).map(|u| u.norm().ln()))
        .collect::<Result<_>>()?;
    let mut best = f64::NEG_INFINITY;
    let mut worst_pair = None;
    let mut pairs = 0;
    for (i, &k1) in ys.iter().enumerate() {
        for (j, &k2) in ys.iter().enumerate() {
            let d = (k1 - k2).abs();
            if d < GROWTH_MIN_SEPARATION {
                continue;
            }
            pairs += 1;
            let ln_c = ln_norms[i] - ln_norms[j] - rate * d as f64;
            if ln_c > best || ln_c.is_nan() {
                best = if ln_c.is_nan() { f64::INFINITY } else { ln_c };
                worst_pair = Some((k1, k2));
            }
        }
    }
    let constant = if pairs == 0 { 0.0 } else { best.exp() };
    Ok(GrowthReport {
        pairs,
        constant,
        worst_pair,
        violation: if constant > cap { worst_pair } else { None },
    })
}

/// Parameters of the block-decay estimate, with `y1 = 0`, `y2 = k0` and `y3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGeometry {
    pub k: u64,
    pub gamma: f64,
    pub epsilon: f64,
    /// The constant `C >= 1` fixing the search range `|x| <= 2Ck` for `k0`.
    pub c: f64,
    pub y3: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointVerdict {
    Inapplicable,
    Checked { lhs: f64, rhs: f64, holds: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub k0: i64,
    pub points: Vec<(i64, PointVerdict)>,
    pub checked: usize,
    pub passed: usize,
}

impl BlockReport {
    pub fn pass_fraction(&self) -> Option<f64> {
        (self.checked > 0).then(|| self.passed as f64 / self.checked as f64)
    }
}

/// Evaluates the block-decay inequality at every site in `[-2Ck, 2Ck]`.
///
/// A site is checked when it lies between consecutive distinct points among
/// `0, k0, y3`, at distance at least `10 gamma k` from both, the two points are
/// at least `k` apart and inside `[-2Ck, 2Ck]`, and all window maxima are
/// covered by the window. Other sites are inapplicable.
pub fn block_decay_check(phi: &[f64], window: Window, params: &ModelParams, geometry: &BlockGeometry) -> Result<BlockReport> {
    let BlockGeometry { k, gamma, epsilon, c, y3 } = *geometry;
    if k == 0 || !(gamma > 0.0) || !(epsilon > 0.0) || !(c >= 1.0) {
        return Err(Error::invalid("geometry", "need k > 0, gamma > 0, epsilon > 0, C >= 1"));
    }
    if phi.len() != window.len() {
        return Err(Error::invalid("phi", "length differs from window"));
    }
    let kf = k as f64;
    let range = (2.0 * c * kf).floor() as i64;
    let k0 = resonance_locator(params.theta, 0, range.max(1) as u64, params)?.x0;
    let radius = (10.0 * gamma * kf).floor() as u64;
    let gap = 10.0 * gamma * kf;
    let shift = 3.0 * gamma * kf;
    let rate = params.lyapunov() - epsilon;
    let r = |y: i64| window_max(phi, window, y, radius).ok();

    let mut nodes = vec![0, k0, y3];
    nodes.sort_unstable();
    nodes.dedup();

    let mut points = Vec::new();
    let (mut checked, mut passed) = (0, 0);
    for y in -range..=range {
        let verdict = nodes
            .windows(2)
            .find(|w| w[0] <= y && y <= w[1])
            .filter(|w| {
                let (yi, yj) = (w[0], w[1]);
                (yj - yi) as f64 >= kf
                    && yi.abs() <= range
                    && yj.abs() <= range
                    && (y - yi) as f64 >= gap
                    && (yj - y) as f64 >= gap
            })
            .and_then(|w| {
                let (ri, rj, ry) = (r(w[0])?, r(w[1])?, r(y)?);
                let bi = ri * (-rate * ((y - w[0]) as f64 - shift)).exp();
                let bj = rj * (-rate * ((w[1] - y) as f64 - shift)).exp();
                Some((ry, bi.max(bj)))
            });
        let v = match verdict {
            Some((lhs, rhs)) => {
                checked += 1;
                let holds = lhs <= rhs;
                passed += holds as usize;
                PointVerdict::Checked { lhs, rhs, holds }
            }
            None => PointVerdict::Inapplicable,
        };
        points.push((y, v));
    }
    Ok(BlockReport {
        k0,
        points,
        checked,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ResonanceVerdict {
    Inapplicable { reason: String },
    Checked { lhs: f64, rhs: f64, holds: bool },
}

pub const SINGLE_RESONANCE_MIN_K: i64 = 20;
pub const RESONANCE_MATCH_RTOL: f64 = 1e-6;

/// Checks `||U(k)|| <= max(||U(0)||, ||U(2k)||) e^{-(L - t - eps)|k|}` given
/// `|sin pi(2 theta + alpha k)| = e^{-t|k|}`.
pub fn single_resonance_check(phi: &[f64], window: Window, params: &ModelParams, k: i64, t: f64, epsilon: f64) -> Result<ResonanceVerdict> {
    if phi.len() != window.len() {
        return Err(Error::invalid("phi", "length differs from window"));
    }
    let skip = |reason: String| Ok(ResonanceVerdict::Inapplicable { reason });
    let l = params.lyapunov();
    if !(t > 0.0 && t < l) {
        return skip(format!("t = {t} outside (0, {l})"));
    }
    if k.abs() < SINGLE_RESONANCE_MIN_K {
        return skip(format!("|k| = {} below {SINGLE_RESONANCE_MIN_K}", k.abs()));
    }
    let ka = k.abs() as f64;
    let actual = -params.resonance_sine(k).ln() / ka;
    if (actual - t).abs() > RESONANCE_MATCH_RTOL * t {
        return skip(format!("resonance exponent {actual} does not match t = {t}"));
    }
    let u = |y| UVector::from_sequence(phi, window, y).map(|u| u.norm());
    let (u0, uk, u2k) = match (u(0), u(k), u(2 * k)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ => return skip("U(0), U(k), U(2k) not all inside the window".into()),
    };
    let rhs = u0.max(u2k) * (-(l - t - epsilon) * ka).exp();
    Ok(ResonanceVerdict::Checked {
        lhs: uk,
        rhs,
        holds: uk <= rhs,
    })
}
