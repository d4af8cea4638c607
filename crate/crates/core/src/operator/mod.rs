//! Finite truncations of the almost Mathieu operator
//! `(Hu)(n) = u(n+1) + u(n-1) + 2 lambda cos 2pi(theta + n alpha) u(n)`
//! and their full eigensystems.

mod record;
mod solver;

pub use record::{decode_record, encode_record, record_key, RECORD_FORMAT_VERSION};
pub use solver::TAIL_THRESHOLD;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arithmetic::Frequency;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};

/// Bumped whenever a change to the solver can alter stored eigensystems.
pub const SOLVER_VERSION: u32 = 1;

/// Coupling, frequency and phase of `H_{lambda, alpha, theta}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub alpha: Frequency,
    /// Phase reduced to [0, 1).
    pub theta: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, alpha: Frequency, theta: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid("lambda", format!("{lambda} must be finite and non-negative")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(Self {
            lambda,
            alpha,
            theta: reduce_phase(theta),
        })
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            lambda: self.lambda,
            alpha: self.alpha.clone(),
            theta: reduce_phase(theta),
        }
    }

    /// `ln lambda` for `lambda > 1`, zero otherwise.
    pub fn lyapunov(&self) -> f64 {
        if self.lambda > 1.0 {
            self.lambda.ln()
        } else {
            0.0
        }
    }

    pub fn is_supercritical(&self) -> bool {
        self.lambda > 1.0
    }

    /// `theta + n alpha` modulo 1.
    pub fn phase(&self, n: i64) -> DoubleDouble {
        (DoubleDouble::from_f64(self.theta) + self.alpha.multiple(n)).fract()
    }

    /// `|sin pi (2 theta + m alpha)|`, accurate to relative precision even
    /// when tiny.
    pub fn resonance_sine(&self, m: i64) -> f64 {
        let x = DoubleDouble::from_f64(2.0 * self.theta) + self.alpha.multiple(m);
        (PI * x.torus_norm().to_f64()).sin()
    }
}

fn reduce_phase(theta: f64) -> f64 {
    let r = theta - theta.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `2 lambda cos 2pi(theta + n alpha)` with the angle reduced before the cosine.
pub fn potential(params: &ModelParams, n: i64) -> f64 {
    let x = params.phase(n).centered_fract().to_f64();
    2.0 * params.lambda * (2.0 * PI * x).cos()
}

/// Inclusive lattice interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid("window", format!("[{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-radius, radius]`.
    pub fn symmetric(radius: u32) -> Self {
        Self {
            lo: -(radius as i64),
            hi: radius as i64,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: i64) -> bool {
        self.lo <= site && site <= self.hi
    }

    pub fn index_of(&self, site: i64) -> Option<usize> {
        self.contains(site).then(|| (site - self.lo) as usize)
    }

    pub fn site(&self, index: usize) -> i64 {
        self.lo + index as i64
    }

    pub fn shifted(&self, m: i64) -> Self {
        Self {
            lo: self.lo + m,
            hi: self.hi + m,
        }
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub(crate) fn check(&self, site: i64) -> Result<usize> {
        self.index_of(site).ok_or(Error::OutOfWindow {
            site,
            lo: self.lo,
            hi: self.hi,
        })
    }
}

/// Real symmetric tridiagonal matrix indexed by the sites of a window.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    window: Window,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(window: Window, diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.len() != window.len() || off.len() + 1 != diag.len() {
            return Err(Error::invalid("matrix", "diagonal/off-diagonal lengths do not match the window"));
        }
        if diag.iter().chain(&off).any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        Ok(Self { window, diag, off })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    pub fn one_norm(&self) -> f64 {
        solver::one_norm(&self.diag, &self.off)
    }

    /// `y = H x` with zero boundary values.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// The Dirichlet truncation of `H_{lambda,alpha,theta}` to `window`.
pub fn build_hamiltonian(params: &ModelParams, window: Window) -> SymTridiagonal {
    let diag = window.sites().map(|n| potential(params, n)).collect();
    let off = vec![1.0; window.len() - 1];
    SymTridiagonal { window, diag, off }
}

/// Per-eigenvector summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMeta {
    /// Leftmost site where `|phi|` is maximal.
    pub center: i64,
    pub sup_norm: f64,
    /// `|phi(lo)|^2 + |phi(hi)|^2`.
    pub boundary_mass: f64,
}

/// Sorted energies and orthonormal eigenvectors of a truncated operator.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    window: Window,
    energies: Vec<f64>,
    vectors: Vec<f64>,
    meta: Vec<EigenMeta>,
}

/// Smallest site attaining `max |phi|`, with exact comparisons.
pub fn leftmost_max(phi: &[f64], window: Window) -> Result<i64> {
    if phi.len() != window.len() {
        return Err(Error::invalid("phi", "length does not match window"));
    }
    let mut best = 0usize;
    let mut best_val = 0.0f64;
    for (i, x) in phi.iter().enumerate() {
        if x.abs() > best_val {
            best_val = x.abs();
            best = i;
        }
    }
    if best_val == 0.0 {
        return Err(Error::invalid("phi", "identically zero"));
    }
    Ok(window.site(best))
}

fn meta_for(phi: &[f64], window: Window) -> EigenMeta {
    let center = leftmost_max(phi, window).unwrap_or(window.lo());
    let sup_norm = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let first = phi[0];
    let last = phi[phi.len() - 1];
    let boundary_mass = if phi.len() == 1 {
        first * first
    } else {
        first * first + last * last
    };
    EigenMeta {
        center,
        sup_norm,
        boundary_mass,
    }
}

/// `max |phi(y + j)|` over `|j| <= radius`.
pub fn window_max(phi: &[f64], window: Window, y: i64, radius: u64) -> Result<f64> {
    let r = radius as i64;
    let a = window.check(y - r)?;
    let b = window.check(y + r)?;
    Ok(phi[a..=b].iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// Full eigendecomposition of a symmetric tridiagonal matrix.
pub fn eigensystem(h: &SymTridiagonal) -> Result<EigenSystem> {
    let sol = solver::solve(&h.diag, &h.off)?;
    EigenSystem::from_parts(h.window, sol.energies, sol.vectors)
}

impl EigenSystem {
    /// Assembles an eigensystem from row-major vectors and recomputes metadata.
    pub fn from_parts(window: Window, energies: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let n = window.len();
        if energies.len() != n || vectors.len() != n * n {
            return Err(Error::invalid("eigensystem", "dimensions do not match the window"));
        }
        let meta = vectors.chunks_exact(n).map(|v| meta_for(v, window)).collect();
        Ok(Self {
            window,
            energies,
            vectors,
            meta,
        })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, s: usize) -> f64 {
        self.energies[s]
    }

    pub fn vector(&self, s: usize) -> &[f64] {
        let n = self.len();
        &self.vectors[s * n..(s + 1) * n]
    }

    pub fn vectors_flat(&self) -> &[f64] {
        &self.vectors
    }

    pub fn meta(&self, s: usize) -> &EigenMeta {
        &self.meta[s]
    }

    pub fn metas(&self) -> &[EigenMeta] {
        &self.meta
    }

    /// `phi_s(site)`, or `None` outside the window.
    pub fn amplitude(&self, s: usize, site: i64) -> Option<f64> {
        self.window.index_of(site).map(|i| self.vector(s)[i])
    }

    /// Largest deviations from `sum_n |phi_s(n)|^2 = 1` over `s` and from
    /// `sum_s |phi_s(n)|^2 = 1` over `n`.
    pub fn completeness_defects(&self) -> (f64, f64) {
        let n = self.len();
        let mut rows = vec![0.0f64; n];
        let mut worst_vec = 0.0f64;
        for s in 0..n {
            let v = self.vector(s);
            let norm: f64 = crate::sum::sum(v.iter().map(|x| x * x));
            worst_vec = worst_vec.max((norm - 1.0).abs());
            for (r, x) in rows.iter_mut().zip(v) {
                *r += x * x;
            }
        }
        let worst_site = rows.iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs()));
        (worst_vec, worst_site)
    }

    /// Largest `|<phi_s, phi_t> - delta_st|` over all pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for s in 0..n {
            let a = self.vector(s);
            for t in s..n {
                let b = self.vector(t);
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if s == t { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// `||H phi_s - E_s phi_s||_2 / (||H||_1 + |E_s|)`, maximized over `s`.
    pub fn max_scaled_residual(&self, h: &SymTridiagonal) -> f64 {
        let scale = h.one_norm();
        (0..self.len())
            .map(|s| {
                let v = self.vector(s);
                let hv = h.apply(v);
                let r: f64 = hv
                    .iter()
                    .zip(v)
                    .map(|(y, x)| (y - self.energies[s] * x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r / (scale + self.energies[s].abs())
            })
            .fold(0.0, f64::max)
    }
}
