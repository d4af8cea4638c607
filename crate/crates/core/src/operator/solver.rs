//! Symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from bisection on Sturm counts, several shifts at a time
//! so the dependent divisions in the count recurrence overlap; once a bracket
//! isolates one eigenvalue, Newton steps on the characteristic polynomial
//! (whose logarithmic derivative falls out of the same recurrence) finish it. Eigenvectors
//! come from inverse iteration with a partially pivoted LU of `T - E`, and are
//! reorthogonalized against earlier vectors whose eigenvalues lie within
//! `1e-3 ||T||_1`. The exponentially small tails are then recomputed from the
//! window boundaries with the three-term recurrence, which keeps them accurate
//! far below the roundoff floor of inverse iteration.

use crate::error::{Error, Result};

const LANES: usize = 8;
const MAX_ITS: usize = 5;
const EXTRA_ITS: usize = 1;
/// Relative size below which a component counts as tail.
pub const TAIL_THRESHOLD: f64 = 1e-7;

pub(crate) struct Solution {
    pub energies: Vec<f64>,
    /// Row-major: vector `s` occupies `s*n .. (s+1)*n`.
    pub vectors: Vec<f64>,
}

pub(crate) fn one_norm(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + left + right
        })
        .fold(0.0, f64::max)
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// For each shift, the number of eigenvalues strictly below it and the
/// logarithmic derivative `d/dx ln|det(T - x)|`, both from the pivots of the
/// `LDL^T` factorization of `T - x`.
fn sturm_pass(
    diag: &[f64],
    off2: &[f64],
    x: &[f64; LANES],
    pivmin: f64,
) -> ([usize; LANES], [f64; LANES]) {
    let mut q = [0.0f64; LANES];
    let mut dq = [-1.0f64; LANES];
    let mut dsum = [0.0f64; LANES];
    let mut count = [0usize; LANES];
    for l in 0..LANES {
        let mut v = diag[0] - x[l];
        if v.abs() < pivmin {
            v = -pivmin;
        }
        q[l] = v;
        count[l] = usize::from(v < 0.0);
    }
    for i in 1..diag.len() {
        let d = diag[i];
        let e2 = off2[i - 1];
        for l in 0..LANES {
            let r = 1.0 / q[l];
            let g = dq[l] * r;
            dsum[l] += g;
            let t = e2 * r;
            let mut v = d - x[l] - t;
            if v.abs() < pivmin {
                v = -pivmin;
            }
            dq[l] = -1.0 + t * g;
            q[l] = v;
            count[l] += usize::from(v < 0.0);
        }
    }
    for l in 0..LANES {
        dsum[l] += dq[l] / q[l];
    }
    (count, dsum)
}

/// A bracket `[lo, hi]` holding eigenvalues `count_lo .. count_hi`.
#[derive(Clone, Copy)]
struct Bracket {
    lo: f64,
    hi: f64,
    count_lo: usize,
    count_hi: usize,
    /// Next evaluation point.
    x: f64,
}

/// All eigenvalues in ascending order.
///
/// A shared worklist of brackets is refined by Sturm counts; a count at any
/// point splits a cluster for all of its members at once. Brackets holding a
/// single eigenvalue are finished with Newton steps on `det(T - x)`,
/// safeguarded to stay inside the bracket.
pub(crate) fn eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let off2: Vec<f64> = off.iter().map(|e| e * e).collect();
    let pivmin = f64::MIN_POSITIVE * off2.iter().copied().fold(1.0, f64::max);
    let (gl, gu) = gershgorin(diag, off);
    let mut out = vec![f64::NAN; n];
    let mut work = vec![Bracket {
        lo: gl,
        hi: gu,
        count_lo: 0,
        count_hi: n,
        x: 0.5 * (gl + gu),
    }];
    let atol = f64::EPSILON * gl.abs().max(gu.abs());
    let tol_of = |lo: f64, hi: f64| (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(atol) + 2.0 * pivmin;
    let mut batch = Vec::with_capacity(LANES);
    while !work.is_empty() {
        batch.clear();
        while batch.len() < LANES {
            match work.pop() {
                Some(b) => batch.push(b),
                None => break,
            }
        }
        let mut xs = [0.0; LANES];
        for (x, b) in xs.iter_mut().zip(&batch) {
            *x = b.x;
        }
        let (counts, dsum) = sturm_pass(diag, &off2, &xs, pivmin);
        for (l, b) in batch.iter().enumerate() {
            let x = b.x;
            let c = counts[l].clamp(b.count_lo, b.count_hi);
            let single = b.count_hi - b.count_lo == 1;
            let mut halves = [
                Bracket { hi: x, count_hi: c, ..*b },
                Bracket { lo: x, count_lo: c, ..*b },
            ];
            for h in halves.iter_mut() {
                let m = h.count_hi - h.count_lo;
                if m == 0 {
                    continue;
                }
                let mid = 0.5 * (h.lo + h.hi);
                if h.hi - h.lo <= tol_of(h.lo, h.hi) || mid == h.lo || mid == h.hi {
                    out[h.count_lo..h.count_hi].iter_mut().for_each(|o| *o = mid);
                    continue;
                }
                h.x = mid;
                if m == 1 && single && dsum[l].is_finite() && dsum[l] != 0.0 {
                    let step = -1.0 / dsum[l];
                    let candidate = x + step;
                    if step.abs() <= (4.0 * f64::EPSILON * x.abs()).max(atol) {
                        out[h.count_lo] = candidate.clamp(h.lo, h.hi);
                        continue;
                    }
                    if candidate > h.lo && candidate < h.hi {
                        h.x = candidate;
                    }
                }
                work.push(*h);
            }
        }
    }
    // Neighbouring brackets can overlap by a rounding unit; keep the order.
    for j in 1..n {
        if out[j] < out[j - 1] {
            out[j] = out[j - 1];
        }
    }
    out
}

/// LU factorization of `T - shift` with partial pivoting, in reusable buffers.
struct TridiagonalLu {
    inv_d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
    last_pivot: f64,
}

impl TridiagonalLu {
    fn with_capacity(n: usize) -> Self {
        Self {
            inv_d: vec![0.0; n],
            du: vec![0.0; n],
            du2: vec![0.0; n],
            dl: vec![0.0; n],
            swapped: vec![false; n],
            last_pivot: 0.0,
        }
    }

    fn factor(&mut self, diag: &[f64], off: &[f64], shift: f64, pert: f64) {
        let n = diag.len();
        let d = &mut self.inv_d;
        let (du, dl, du2, swapped) = (&mut self.du, &mut self.dl, &mut self.du2, &mut self.swapped);
        for i in 0..n {
            d[i] = diag[i] - shift;
        }
        du[..n - 1].copy_from_slice(off);
        dl[..n - 1].copy_from_slice(off);
        du2.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                swapped[i] = false;
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                } else {
                    dl[i] = 0.0;
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < pert {
                *v = if *v < 0.0 { -pert } else { pert };
            }
        }
        self.last_pivot = d[n - 1];
        for v in d.iter_mut() {
            *v = 1.0 / *v;
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            let (x, y) = (b[i], b[i + 1]);
            let (top, other) = if self.swapped[i] { (y, x) } else { (x, y) };
            b[i] = top;
            b[i + 1] = other - self.dl[i] * top;
        }
        let d = &self.inv_d;
        b[n - 1] *= d[n - 1];
        b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) * d[n - 2];
        for i in (0..n - 2).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) * d[i];
        }
    }
}

/// Deterministic start vector with entries in (-1, 1).
fn start_vector(seed: u64, out: &mut [f64]) {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    for v in out.iter_mut() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        *v = 2.0 * ((state >> 11) as f64 / (1u64 << 53) as f64) - 1.0;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub(crate) fn solve(diag: &[f64], off: &[f64]) -> Result<Solution> {
    let n = diag.len();
    if n == 1 {
        return Ok(Solution {
            energies: vec![diag[0]],
            vectors: vec![1.0],
        });
    }
    let energies = eigenvalues(diag, off);
    let onenrm = one_norm(diag, off).max(f64::MIN_POSITIVE);
    let ortol = 1e-3 * onenrm;
    let dtpcrt = (0.1 / n as f64).sqrt();
    let eps = f64::EPSILON;
    let mut vectors = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut shifts = Vec::with_capacity(n);
    let mut lu = TridiagonalLu::with_capacity(n);

    for j in 0..n {
        let mut xj = energies[j];
        if j > 0 {
            let pertol = 10.0 * (eps * xj).abs().max(eps * onenrm * 1e-3);
            if xj - shifts[j - 1] < pertol {
                xj = shifts[j - 1] + pertol;
            }
        }
        shifts.push(xj);
        lu.factor(diag, off, xj, eps * onenrm);
        start_vector(j as u64 + 1, &mut b);
        let mut first_neighbor = j;
        while first_neighbor > 0 && xj - shifts[first_neighbor - 1] <= ortol {
            first_neighbor -= 1;
        }
        let (done, rest) = vectors.split_at_mut(j * n);
        let mut converged = false;
        let mut checks = 0;
        for _ in 0..MAX_ITS {
            let asum: f64 = b.iter().map(|x| x.abs()).sum();
            let scl = n as f64 * onenrm * eps.max(lu.last_pivot.abs()) / asum.max(f64::MIN_POSITIVE);
            b.iter_mut().for_each(|x| *x *= scl);
            lu.solve(&mut b);
            for i in first_neighbor..j {
                let zi = &done[i * n..(i + 1) * n];
                for _ in 0..2 {
                    let d = dot(zi, &b);
                    b.iter_mut().zip(zi).for_each(|(x, z)| *x -= d * z);
                }
            }
            let nrm = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !nrm.is_finite() {
                break;
            }
            if nrm < dtpcrt {
                continue;
            }
            checks += 1;
            if checks > EXTRA_ITS {
                converged = true;
                break;
            }
        }
        let norm2 = dot(&b, &b).sqrt();
        if !converged || !norm2.is_finite() || norm2 == 0.0 {
            let cluster = energies[first_neighbor..=j].to_vec();
            return Err(Error::NoConvergence {
                energy: energies[j],
                cluster,
            });
        }
        b.iter_mut().for_each(|x| *x /= norm2);
        refine_tails(diag, off, energies[j], &mut b, &mut scratch, TAIL_THRESHOLD);
        let jmax = b
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc })
            .0;
        let sign = if b[jmax] < 0.0 { -1.0 } else { 1.0 };
        rest[..n].iter_mut().zip(&b).for_each(|(z, x)| *z = sign * x);
    }
    Ok(Solution { energies, vectors })
}

/// Replaces components below `tau * max|v|` outside the outermost large
/// components by the solution of the eigen-recurrence that vanishes beyond the
/// window, then renormalizes.
pub(crate) fn refine_tails(
    diag: &[f64],
    off: &[f64],
    energy: f64,
    v: &mut [f64],
    ratio: &mut [f64],
    tau: f64,
) {
    let n = v.len();
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if n < 3 || vmax == 0.0 {
        return;
    }
    let thr = tau * vmax;
    let first = v.iter().position(|x| x.abs() >= thr).unwrap();
    let last = v.iter().rposition(|x| x.abs() >= thr).unwrap();
    let guard = |x: f64| {
        if x.abs() < f64::MIN_POSITIVE {
            f64::MIN_POSITIVE.copysign(x)
        } else {
            x
        }
    };
    if last + 1 < n {
        // ratio[i] = v[i] / v[i-1], from the right boundary where v[n] = 0.
        let mut next = 0.0;
        for i in (last + 1..n).rev() {
            let right = if i + 1 < n { off[i] * next } else { 0.0 };
            next = -off[i - 1] / guard(diag[i] - energy + right);
            ratio[i] = next;
        }
        for i in last + 1..n {
            v[i] = ratio[i] * v[i - 1];
        }
    }
    if first > 0 {
        // ratio[i] = v[i] / v[i+1], from the left boundary where v[-1] = 0.
        let mut prev = 0.0;
        for i in 0..first {
            let left = if i > 0 { off[i - 1] * prev } else { 0.0 };
            prev = -off[i] / guard(diag[i] - energy + left);
            ratio[i] = prev;
        }
        for i in (0..first).rev() {
            v[i] = ratio[i] * v[i + 1];
        }
    }
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}
