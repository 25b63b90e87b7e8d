//! Shared low-level numerical routines.
//!
//! Everything here is a pure function of its inputs, except
//! [`ToeplitzConvolver`] which caches FFT plans and kernel spectra.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Uniform partition of `[left, right]` into `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UniformGrid {
    left: f64,
    right: f64,
    n_cells: usize,
}

impl UniformGrid {
    pub fn new(left: f64, right: f64, n_cells: usize) -> Result<Self> {
        if !(left < right) || !left.is_finite() || !right.is_finite() {
            return Err(invalid(format!("grid needs left < right, got [{left}, {right}]")));
        }
        if n_cells < 2 {
            return Err(invalid(format!("grid needs at least 2 cells, got {n_cells}")));
        }
        Ok(Self { left, right, n_cells })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of nodes, `n_cells + 1`.
    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.right - self.left) / self.n_cells as f64
    }

    /// Position of node `j`; the last node is exactly `right`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_cells {
            self.right
        } else {
            self.left + j as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.node(j))
    }
}

/// Composite trapezoid rule for samples on `grid`.
pub fn trapezoid(grid: &UniformGrid, values: &[f64]) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(invalid(format!(
            "trapezoid: {} samples for a grid with {} nodes",
            values.len(),
            grid.len()
        )));
    }
    Ok(trapezoid_uniform(values, grid.spacing()))
}

pub(crate) fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            h * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Result of a bracketing root search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Bisection for a monotone increasing `g` with `g(lo) < 0 < g(hi)`.
///
/// Stops when `|g(x)| <= tol` or the bracket is narrower than `tol`.
pub fn bisect(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<Root> {
    try_bisect(|c| Ok::<_, Error>(g(c)), lo, hi, tol)
}

/// Fallible variant of [`bisect`]; errors from `g` abort the search.
pub fn try_bisect<E: From<Error>>(
    mut g: impl FnMut(f64) -> std::result::Result<f64, E>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> std::result::Result<Root, E> {
    if !(tol > 0.0) || !(lo < hi) {
        return Err(invalid(format!("bisect: need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}")).into());
    }
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    let mut evaluations = 2;
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi }.into());
    }
    let (mut a, mut b) = (lo, hi);
    let (mut best_x, mut best_v) = if -g_lo < g_hi { (lo, g_lo) } else { (hi, g_hi) };
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let v = g(mid)?;
        evaluations += 1;
        if v.abs() < best_v.abs() {
            best_x = mid;
            best_v = v;
        }
        if v.abs() <= tol {
            return Ok(Root { x: mid, value: v, bracket: (a, b), evaluations });
        }
        if v < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Root { x: best_x, value: best_v, bracket: (a, b), evaluations })
}

/// Golden-section search for the minimizer of a unimodal `g` on `[lo, hi]`.
pub fn minimize_scalar(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(invalid(format!("minimize_scalar: need lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(invalid("minimize_scalar: tol must be positive"));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2);
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, g(x)))
}

/// Least-squares slope of `xs` against `ts`.
pub fn fit_slope(ts: &[f64], xs: &[f64]) -> Result<f64> {
    if ts.len() != xs.len() || ts.len() < 2 {
        return Err(invalid(format!(
            "fit_slope: need two equal-length sequences of length >= 2, got {} and {}",
            ts.len(),
            xs.len()
        )));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("fit_slope: abscissae must be strictly increasing"));
    }
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let x_mean = xs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&t, &x) in ts.iter().zip(xs) {
        let dt = t - t_mean;
        sxy += dt * (x - x_mean);
        sxx += dt * dt;
    }
    if sxx == 0.0 {
        return Err(invalid("fit_slope: degenerate abscissae"));
    }
    Ok(sxy / sxx)
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre rule on `[a, b]`.
pub(crate) fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Gauss–Legendre on `[a, b]`, split at every breakpoint strictly inside
/// and into panels no wider than `max_panel`.
pub(crate) fn gauss_legendre_split(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    max_panel: f64,
) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    cuts.extend(inner);
    cuts.push(b);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let p0 = lo + k as f64 * step;
            let p1 = if k + 1 == pieces { hi } else { p0 + step };
            acc += gauss_legendre(&f, p0, p1);
        }
    }
    acc
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

/// Symmetric Toeplitz matrix–vector products `out_i = Σ_j w[|i-j|] x_j`.
///
/// Uses a circulant embedding and FFTs for long inputs; plans and kernel
/// spectra are cached per transform length.
pub struct ToeplitzConvolver {
    weights: Vec<f64>,
    planner: FftPlanner<f64>,
    plans: HashMap<usize, Plan>,
    buffer: Vec<Complex<f64>>,
}

const DIRECT_LIMIT: usize = 48;

impl ToeplitzConvolver {
    /// `weights[k]` is the coefficient for offset `k`; inputs may be at most
    /// `weights.len()` long.
    pub fn new(weights: Vec<f64>) -> Self {
        Self {
            weights,
            planner: FftPlanner::new(),
            plans: HashMap::new(),
            buffer: Vec::new(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&mut self, input: &[f64], out: &mut [f64]) {
        let n = input.len();
        assert!(n <= self.weights.len(), "input longer than the stored kernel row");
        assert_eq!(n, out.len());
        if n == 0 {
            return;
        }
        if n <= DIRECT_LIMIT {
            for (i, o) in out.iter_mut().enumerate() {
                *o = input
                    .iter()
                    .enumerate()
                    .map(|(j, x)| self.weights[i.abs_diff(j)] * x)
                    .sum();
            }
            return;
        }
        let size = (2 * n).next_power_of_two();
        if !self.plans.contains_key(&size) {
            let plan = self.make_plan(size);
            self.plans.insert(size, plan);
        }
        let plan = &self.plans[&size];
        self.buffer.clear();
        self.buffer.extend(input.iter().map(|&x| Complex::new(x, 0.0)));
        self.buffer.resize(size, Complex::new(0.0, 0.0));
        plan.forward.process(&mut self.buffer);
        for (b, s) in self.buffer.iter_mut().zip(&plan.spectrum) {
            *b *= s;
        }
        plan.inverse.process(&mut self.buffer);
        let scale = 1.0 / size as f64;
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re * scale;
        }
    }

    fn make_plan(&mut self, size: usize) -> Plan {
        let forward = self.planner.plan_fft_forward(size);
        let inverse = self.planner.plan_fft_inverse(size);
        let half = size / 2;
        let mut circ = vec![Complex::new(0.0, 0.0); size];
        for k in 0..half.min(self.weights.len()) {
            circ[k] = Complex::new(self.weights[k], 0.0);
            if k > 0 {
                circ[size - k] = Complex::new(self.weights[k], 0.0);
            }
        }
        forward.process(&mut circ);
        Plan { forward, inverse, spectrum: circ }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_are_reproducible() {
        let g = UniformGrid::new(-40.0, 0.0, 4000).unwrap();
        assert_eq!(g.node(4000), 0.0);
        assert_eq!(g.node(0), -40.0);
        assert_eq!(g.node(123), -40.0 + 123.0 * 0.01);
        assert!(UniformGrid::new(1.0, 1.0, 10).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn trapezoid_examples() {
        for n in [2, 7, 50] {
            let g = UniformGrid::new(0.0, 1.0, n).unwrap();
            let ones = vec![1.0; g.len()];
            assert!((trapezoid(&g, &ones).unwrap() - 1.0).abs() < 1e-14);
        }
        let g = UniformGrid::new(0.0, 1.0, 10).unwrap();
        let lin: Vec<f64> = g.nodes().collect();
        assert!((trapezoid(&g, &lin).unwrap() - 0.5).abs() < 1e-14);
        let g = UniformGrid::new(0.0, 1.0, 100).unwrap();
        let sq: Vec<f64> = g.nodes().map(|x| x * x).collect();
        // error bound h^2/12 * max|f''| = 1e-4/12 * 2
        assert!((trapezoid(&g, &sq).unwrap() - 1.0 / 3.0).abs() < 2e-5);
        assert!(matches!(trapezoid(&g, &sq[..50]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bisect_examples() {
        let r = bisect(|c| c - 1.0, 0.0, 2.0, 1e-10).unwrap();
        assert!((r.x - 1.0).abs() < 1e-10);
        let r = bisect(|c| c * c - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(bisect(|c| c + 5.0, 0.0, 1.0, 1e-8), Err(Error::Bracket { .. })));
    }

    #[test]
    fn minimize_examples() {
        let (x, v) = minimize_scalar(|l| (l - 0.5).powi(2), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.5).abs() < 1e-8 && v < 1e-15);
        let (x, v) = minimize_scalar(|l| 1.0 / (l - l * l * l), 1e-6, 1.0 - 1e-6, 1e-10).unwrap();
        assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-6);
        assert!((v - 1.5 * 3f64.sqrt()).abs() < 1e-9);
        let (x, v) = minimize_scalar(|l| l + 1.0 / l, 0.1, 10.0, 1e-10).unwrap();
        assert!((x - 1.0).abs() < 1e-6 && (v - 2.0).abs() < 1e-10);
        assert!(minimize_scalar(|l| l, 1.0, 1.0, 1e-6).is_err());
    }

    #[test]
    fn fit_slope_examples() {
        assert!((fit_slope(&[0.0, 1.0, 2.0], &[0.0, 2.0, 4.0]).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(fit_slope(&[0.0, 1.0], &[5.0, 5.0]).unwrap(), 0.0);
        let ts = [0.0, 1.0, 2.0, 3.0, 4.0];
        let eps = 0.3;
        let xs: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| 1.5 * t + if i == 1 { eps } else if i == 3 { eps } else { 0.0 })
            .collect();
        assert!((fit_slope(&ts, &xs).unwrap() - 1.5).abs() < 1e-12);
        assert!(fit_slope(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(fit_slope(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn toeplitz_fft_matches_direct() {
        let w: Vec<f64> = (0..500).map(|k| (-(k as f64) * 0.05).exp()).collect();
        let x: Vec<f64> = (0..300).map(|i| ((i as f64) * 0.37).sin().abs()).collect();
        let mut conv = ToeplitzConvolver::new(w.clone());
        let mut out = vec![0.0; x.len()];
        conv.apply(&x, &mut out);
        for i in 0..x.len() {
            let direct: f64 = x.iter().enumerate().map(|(j, v)| w[i.abs_diff(j)] * v).sum();
            assert!((direct - out[i]).abs() < 1e-11, "{i}: {direct} vs {}", out[i]);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn trapezoid_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, n in 2usize..60) {
                let g = UniformGrid::new(-1.0, 2.0, n).unwrap();
                let f: Vec<f64> = g.nodes().map(|x| x.sin()).collect();
                let h: Vec<f64> = g.nodes().map(|x| x * x).collect();
                let mix: Vec<f64> = f.iter().zip(&h).map(|(p, q)| a * p + b * q).collect();
                let lhs = trapezoid(&g, &mix).unwrap();
                let rhs = a * trapezoid(&g, &f).unwrap() + b * trapezoid(&g, &h).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-11);
                let affine: Vec<f64> = g.nodes().map(|x| a * x + b).collect();
                let exact = a * (4.0 - 1.0) / 2.0 + b * 3.0;
                prop_assert!((trapezoid(&g, &affine).unwrap() - exact).abs() < 1e-11);
            }

            #[test]
            fn fit_slope_shift_invariant(shift in -100.0..100.0f64, noise in proptest::collection::vec(-1.0..1.0f64, 6)) {
                let ts: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
                let xs: Vec<f64> = ts.iter().zip(&noise).map(|(t, e)| 2.0 * t + e).collect();
                let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
                let s0 = fit_slope(&ts, &xs).unwrap();
                let s1 = fit_slope(&ts, &shifted).unwrap();
                prop_assert!((s0 - s1).abs() < 1e-9);
            }

            #[test]
            fn bisect_width_halves(root in 0.01..0.99f64) {
                let mut widths = Vec::new();
                let mut last = (0.0, 1.0);
                let r = bisect(|c| { widths.push(c); c - root }, 0.0, 1.0, 1e-9).unwrap();
                prop_assert!((r.x - root).abs() <= 1e-9);
                // evaluations beyond the two ends are midpoints of halving brackets
                for m in widths.iter().skip(2) {
                    let (a, b) = last;
                    prop_assert!((m - 0.5 * (a + b)).abs() < 1e-15);
                    last = if *m < root { (*m, b) } else { (a, *m) };
                }
            }
        }
    }
}
