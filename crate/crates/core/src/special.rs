//! Special functions shared by the Fock, Wigner and homodyne code.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Harmonic-oscillator eigenfunctions ψ_0..ψ_{n_max}(x) for vacuum variance 1/2.
///
/// Uses the stable three-term recurrence, so it is safe for large `n_max`.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut psi = vec![0.0; n_max + 1];
    psi[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n_max >= 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for n in 1..n_max {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Generalized Laguerre polynomial L_n^{(a)}(t).
pub fn laguerre(n: usize, a: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - t;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - t) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// All L_k^{(a)}(t) for k = 0..=n_max.
pub fn laguerre_all(n_max: usize, a: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + a - t);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - t) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// ln(n!) for n = 0..=n_max.
pub fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        out[n] = out[n - 1] + (n as f64).ln();
    }
    out
}

/// Gauss–Hermite nodes and weights for the weight function e^{-x²} (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Nodes and probability weights for E[f(Z)] with Z ~ N(0, sigma²).
pub fn gaussian_quadrature(n: usize, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gauss_hermite(n);
    let scale = std::f64::consts::SQRT_2 * sigma;
    let norm = PI.sqrt();
    (
        nodes.into_iter().map(|x| x * scale).collect(),
        weights.into_iter().map(|w| w / norm).collect(),
    )
}
