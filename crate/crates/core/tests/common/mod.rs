//! Reference solvers shared by the integration tests. They avoid the library
//! quadrature so agreement is meaningful.
#![allow(dead_code)]

use frontlab_core::kernel::Kernel;

/// Semi-wave for the Laplace kernel and logistic growth by damped Picard
/// iteration on the ODE form, integrated backward from `φ(0) = 0`.
///
/// The convolution of the piecewise-linear iterate with `e^{-|x|}/2` is
/// evaluated exactly by two exponential sweeps; the far field beyond `-L`
/// is the constant 1.
pub struct PicardResult {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub iterations: usize,
    pub last_change: f64,
}

pub fn laplace_convolution(phi: &[f64], h: f64, length: f64, x: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let e = (-h).exp();
    let lin = (1.0 - e * (1.0 + h)) / h;
    let mut left = vec![0.0; n];
    for i in 1..n {
        let (p, q) = (phi[i - 1], phi[i]);
        left[i] = e * left[i - 1] + q * (1.0 - e) + (p - q) * lin;
    }
    let mut right = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let (p, q) = (phi[i], phi[i + 1]);
        right[i] = e * right[i + 1] + p * (1.0 - e) + (q - p) * lin;
    }
    (0..n)
        .map(|i| 0.5 * (left[i] + right[i]) + 0.5 * (-(x[i] + length)).exp())
        .collect()
}

pub fn picard_semiwave(c: f64, d: f64, length: f64, n_cells: usize) -> PicardResult {
    let h = length / n_cells as f64;
    let x: Vec<f64> = (0..=n_cells).map(|j| -length + j as f64 * h).collect();
    let f = |u: f64| u * (1.0 - u);
    let df = |u: f64| 1.0 - 2.0 * u;
    let rhs = |u: f64, inner: f64| (d * u - d * inner - f(u)) / c;
    let mut phi: Vec<f64> = x.iter().map(|&x| 1.0 - (x / 3.0).exp()).collect();
    let omega = 0.5;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < 20_000 {
        iterations += 1;
        let inner = laplace_convolution(&phi, h, length, &x);
        let mut next = vec![0.0; n_cells + 1];
        for i in (0..n_cells).rev() {
            // trapezoid step from x_{i+1} to x_i, solved for φ_i by Newton
            let known = next[i + 1] - 0.5 * h * rhs(next[i + 1], inner[i + 1]);
            let mut u = next[i + 1];
            for _ in 0..30 {
                let g = u + 0.5 * h * rhs(u, inner[i]) - known;
                let dg = 1.0 + 0.5 * h * (d - df(u)) / c;
                let step = g / dg;
                u -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            next[i] = u;
        }
        last_change = 0.0;
        for (p, q) in phi.iter_mut().zip(&next) {
            let v = (1.0 - omega) * *p + omega * q;
            last_change = f64::max(last_change, (v - *p).abs());
            *p = v;
        }
        if last_change < 1e-12 {
            break;
        }
    }
    PicardResult { x, phi, iterations, last_change }
}

/// Largest real eigenvalue of the dense trapezoid discretization of
/// `φ ↦ d∫_{-ℓ}^{ℓ}J(x−y)φ(y)dy − dφ + aφ` on `n + 1` nodes.
pub fn dense_eigenvalue(ell: f64, d: f64, k: &Kernel, a: f64, n: usize) -> f64 {
    let h = 2.0 * ell / n as f64;
    let x: Vec<f64> = (0..=n).map(|j| -ell + j as f64 * h).collect();
    // symmetrize with the square roots of the trapezoid weights
    let w: Vec<f64> = (0..=n).map(|j| if j == 0 || j == n { 0.5 * h } else { h }).collect();
    let m = nalgebra::DMatrix::from_fn(n + 1, n + 1, |i, j| {
        let mut v = d * (w[i] * w[j]).sqrt() * k.density(x[i] - x[j]);
        if i == j {
            v += a - d;
        }
        v
    });
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
