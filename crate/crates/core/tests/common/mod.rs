#![allow(dead_code)]

use amolab_core::operator::{build_hamiltonian, eigensystem, EigenSystem, ModelParams, Window};
use amolab_core::Frequency;

/// Fibonacci pair `(F_k, F_{k+1})` with `F_{k+1}` just below 2^110, so that
/// `F_k / F_{k+1}` approximates the golden mean to ~1e-66.
pub fn fibonacci_convergent() -> (u128, u128) {
    let (mut a, mut b) = (1u128, 1u128);
    while b < (1u128 << 110) {
        let c = a + b;
        a = b;
        b = c;
    }
    (a, b)
}

/// `n * alpha mod 1` for the golden mean, exactly as a rational `r / q`.
pub fn golden_multiple_mod1(n: i64) -> (u128, u128) {
    let (p, q) = fibonacci_convergent();
    let m = mulmod(n.unsigned_abs() as u128 % q, p, q);
    let r = if n >= 0 { m } else { (q - m) % q };
    (r, q)
}

fn mulmod(mut a: u128, mut b: u128, q: u128) -> u128 {
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % q;
        }
        a = (a << 1) % q;
        b >>= 1;
    }
    acc
}

/// `r / q` as a double, by long division to 120 fractional bits.
pub fn ratio_f64(r: u128, q: u128) -> f64 {
    assert!(r < q && q < (1u128 << 126));
    let mut rem = r;
    let mut bits: u128 = 0;
    for _ in 0..120 {
        rem <<= 1;
        bits <<= 1;
        if rem >= q {
            rem -= q;
            bits |= 1;
        }
    }
    bits as f64 / 2f64.powi(120)
}

pub fn golden(lambda: f64, theta: f64) -> ModelParams {
    ModelParams::new(lambda, Frequency::golden(), theta).unwrap()
}

pub fn solve(p: &ModelParams, w: Window) -> EigenSystem {
    eigensystem(&build_hamiltonian(p, w)).unwrap()
}

/// Dense symmetric eigensolver oracle, eigenpairs sorted by energy.
pub fn dense_oracle(p: &ModelParams, w: Window) -> (Vec<f64>, Vec<Vec<f64>>) {
    let h = build_hamiltonian(p, w);
    let n = w.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = h.diag()[i];
        if i + 1 < n {
            m[(i, i + 1)] = 1.0;
            m[(i + 1, i)] = 1.0;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}
