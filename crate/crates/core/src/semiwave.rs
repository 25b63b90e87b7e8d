//! Semi-wave profiles by monotone iteration.
//!
//! For a speed `c` the profile solves, on `(-∞, 0]`,
//!
//! ```text
//! d ∫_{-∞}^0 J(x - y) φ(y) dy - d φ(x) + c φ'(x) + f(φ(x)) = 0,
//! φ(-∞) = P, φ(0) = 0,
//! ```
//!
//! where `P` is the positive equilibrium of `f`. It is the fixed point of
//!
//! ```text
//! A[φ](x) = σ e^{Mx} + (1/c) ∫_x^0 e^{M(x-ξ)} F[φ](ξ) dξ,
//! F[φ] = d (J*φ) + d σ a(ξ) + (cM - d) φ + f(φ),
//! ```
//!
//! which is monotone once `cM - d + f' >= 0`. Iterating from `φ ≡ 1`
//! descends to the maximal fixed point; a collapsed plateau signals that no
//! semi-wave exists at this speed.

use log::{debug, warn};

use crate::error::{invalid, Error, Result};
use crate::kernel::{hat_weights, Kernel, TailClass};
use crate::numerics::{minimize_scalar, trapezoid, ToeplitzConvolver, UniformGrid};
use crate::reaction::Reaction;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SemiWaveParams {
    /// Truncation depth `L`; the profile lives on `[-L, 0]`.
    pub length: f64,
    pub n_cells: usize,
    /// Boundary value `φ(0) = σ` of the perturbed problem.
    pub sigma_homotopy: f64,
    pub tol_iter: f64,
    pub max_iters: usize,
    pub plateau_eps: f64,
}

impl Default for SemiWaveParams {
    fn default() -> Self {
        Self {
            length: 40.0,
            n_cells: 4000,
            sigma_homotopy: 0.0,
            tol_iter: 1e-10,
            max_iters: 100_000,
            plateau_eps: 1e-2,
        }
    }
}

impl SemiWaveParams {
    /// Defaults with the truncation depth chosen from the kernel's tail.
    pub fn for_kernel(k: &Kernel) -> Self {
        let length = match k.tail_class() {
            TailClass::HeavyTailJ1Only | TailClass::FatTail => 400.0,
            TailClass::ThinTail => 40.0,
            TailClass::CompactSupport => 40.0 + k.support_radius().unwrap_or(0.0),
        };
        Self { length, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.length > 0.0 && self.length.is_finite()) {
            problems.push(format!("length must be positive, got {}", self.length));
        }
        if self.n_cells < 100 {
            problems.push(format!("n_cells must be at least 100, got {}", self.n_cells));
        }
        if !(self.sigma_homotopy >= 0.0 && self.sigma_homotopy < 1.0) {
            problems.push(format!("sigma_homotopy must lie in [0, 1), got {}", self.sigma_homotopy));
        }
        if !(self.tol_iter > 0.0) {
            problems.push(format!("tol_iter must be positive, got {}", self.tol_iter));
        }
        if self.max_iters == 0 {
            problems.push("max_iters must be positive".into());
        }
        if !(self.plateau_eps > 0.0 && self.plateau_eps < 0.1) {
            problems.push(format!("plateau_eps must lie in (0, 0.1), got {}", self.plateau_eps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(-self.length, 0.0, self.n_cells)
    }
}

/// Exponential shift `M` making `(cM - d)u + f(u)` nondecreasing.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MConstant {
    pub m: f64,
}

pub fn choose_m(c: f64, d: f64, r: &Reaction) -> Result<MConstant> {
    if !(c > 0.0) {
        return Err(invalid(format!("speed must be positive, got {c}")));
    }
    if !(d > 0.0) {
        return Err(invalid(format!("diffusion rate must be positive, got {d}")));
    }
    Ok(MConstant { m: (d + r.effective_lipschitz()) / c })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SemiWaveProfile {
    pub grid: UniformGrid,
    pub phi: Vec<f64>,
    pub c: f64,
    pub d: f64,
    pub sigma: f64,
    /// Far-field value `P` assumed beyond `-L`.
    pub plateau_target: f64,
    pub plateau_value: f64,
    pub iterations_used: usize,
    /// Sup norm of the differential-form defect (centered differences).
    pub residual: f64,
    /// `sup |A[φ] - φ|` at the returned profile.
    pub fixed_point_defect: f64,
    /// Largest pointwise increase between consecutive iterates.
    pub max_upward_step: f64,
    /// `f(φ(0))`, nonzero only for the perturbed problem.
    pub boundary_reaction: f64,
}

impl SemiWaveProfile {
    pub fn x(&self) -> Vec<f64> {
        self.grid.nodes().collect()
    }

    /// Piecewise-linear interpolation, `P` to the left of the grid and 0 to
    /// the right.
    pub fn value_at(&self, x: f64) -> f64 {
        if x <= self.grid.left() {
            return self.plateau_target;
        }
        if x >= 0.0 {
            return if x == 0.0 { self.phi[self.phi.len() - 1] } else { 0.0 };
        }
        let h = self.grid.spacing();
        let s = (x - self.grid.left()) / h;
        let j = (s.floor() as usize).min(self.grid.n_cells() - 1);
        let t = s - j as f64;
        self.phi[j] * (1.0 - t) + self.phi[j + 1] * t
    }

    /// Sup of `φ` over `[-width, 0]`.
    pub fn sup_near_front(&self, width: f64) -> f64 {
        self.grid
            .nodes()
            .zip(&self.phi)
            .filter(|(x, _)| *x >= -width)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NonExistence {
    pub c: f64,
    pub plateau_value: f64,
    pub plateau_target: f64,
    pub iterations: usize,
    pub fixed_point_defect: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum SemiWaveOutcome {
    Accepted(SemiWaveProfile),
    NonExistence(NonExistence),
}

impl SemiWaveOutcome {
    pub fn accepted(self) -> Option<SemiWaveProfile> {
        match self {
            SemiWaveOutcome::Accepted(p) => Some(p),
            SemiWaveOutcome::NonExistence(_) => None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, SemiWaveOutcome::Accepted(_))
    }
}

/// Outer-integral weights for piecewise-linear `F` against `e^{-Mt}` on one cell.
fn exp_weights(m: f64, h: f64) -> (f64, f64, f64) {
    let z = m * h;
    let decay = (-z).exp();
    let i0 = -(-z).exp_m1() / m;
    // ∫_0^h t e^{-Mt} dt = h² Σ (-z)^k / (k! (k + 2))
    let i1 = if z < 1.0 {
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 0..40 {
            acc += term / (k as f64 + 2.0);
            term *= -z / (k as f64 + 1.0);
        }
        h * h * acc
    } else {
        (1.0 - decay - z * decay) / (m * m)
    };
    let beta = i1 / h;
    (decay, i0 - beta, beta)
}

/// Discretized operator for one kernel, reaction and grid; reusable across
/// speeds.
pub struct SemiWaveSolver {
    d: f64,
    reaction: Reaction,
    params: SemiWaveParams,
    grid: UniformGrid,
    conv: ToeplitzConvolver,
    half: Vec<f64>,
    /// `a(x_i)`, mass pushed in from `[0, ∞)` under the perturbed boundary value.
    tail_at_node: Vec<f64>,
    /// `P · a(-L - x_i)`, contribution of the far field `(-∞, -L)`.
    far_field: Vec<f64>,
    inner: Vec<f64>,
}

impl SemiWaveSolver {
    pub fn new(d: f64, k: &Kernel, r: &Reaction, params: &SemiWaveParams) -> Result<Self> {
        params.validate()?;
        if !(d > 0.0) {
            return Err(invalid(format!("diffusion rate must be positive, got {d}")));
        }
        if !k.tail_class().has_finite_first_moment() {
            return Err(Error::UnsupportedTail(k.tail_class()));
        }
        let grid = params.grid()?;
        let n = grid.n_cells();
        let dx = grid.spacing();
        let weights = hat_weights(k, dx, n);
        let plateau = r.equilibrium;
        let tail_at_node = grid.nodes().map(|x| k.tail_mass(x)).collect();
        let far_field = (0..=n).map(|i| plateau * k.tail_mass(-(i as f64) * dx)).collect();
        Ok(Self {
            d,
            reaction: r.clone(),
            params: params.clone(),
            grid,
            conv: ToeplitzConvolver::new(weights.full),
            half: weights.half,
            tail_at_node,
            far_field,
            inner: vec![0.0; n + 1],
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn params(&self) -> &SemiWaveParams {
        &self.params
    }

    /// `∫_{-L}^0 J(x_i - y) φ(y) dy + P a(-L - x_i)` for piecewise-linear `φ`.
    fn convolve(&mut self, phi: &[f64]) {
        let n = self.grid.n_cells();
        self.conv.apply(phi, &mut self.inner);
        let (first, last) = (phi[0], phi[n]);
        for (i, v) in self.inner.iter_mut().enumerate() {
            *v += self.far_field[i] - first * self.half[i] - last * self.half[n - i];
        }
    }

    /// One application of `A` at speed `c`, clamped into `[0, 1]`.
    pub fn apply(&mut self, phi: &[f64], c: f64, m: MConstant, sigma: f64, out: &mut [f64]) {
        let n = self.grid.n_cells();
        assert_eq!(phi.len(), n + 1);
        assert_eq!(out.len(), n + 1);
        self.convolve(phi);
        let d = self.d;
        let shift = c * m.m - d;
        let forcing = |i: usize, inner: &[f64]| {
            d * inner[i] + d * sigma * self.tail_at_node[i] + shift * phi[i] + self.reaction.value(phi[i])
        };
        let (decay, alpha, beta) = exp_weights(m.m, self.grid.spacing());
        let mut acc = 0.0;
        let mut f_next = forcing(n, &self.inner);
        out[n] = sigma;
        for i in (0..n).rev() {
            let f_here = forcing(i, &self.inner);
            acc = decay * acc + alpha * f_here + beta * f_next;
            let x = self.grid.node(i);
            out[i] = (sigma * (m.m * x).exp() + acc / c).clamp(0.0, 1.0);
            f_next = f_here;
        }
    }

    /// Sup norm of `d(J*φ) + dσa - dφ + cφ' + f(φ)` with finite-difference `φ'`.
    pub fn residual(&mut self, phi: &[f64], c: f64, sigma: f64) -> f64 {
        let n = self.grid.n_cells();
        let h = self.grid.spacing();
        self.convolve(phi);
        (0..=n)
            .map(|i| {
                let slope = if i == 0 {
                    (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h)
                } else if i == n {
                    (3.0 * phi[n] - 4.0 * phi[n - 1] + phi[n - 2]) / (2.0 * h)
                } else {
                    (phi[i + 1] - phi[i - 1]) / (2.0 * h)
                };
                (self.d * (self.inner[i] + sigma * self.tail_at_node[i] - phi[i])
                    + c * slope
                    + self.reaction.value(phi[i]))
                .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Iterates `A` at speed `c` from `start` (default `φ ≡ 1`).
    pub fn solve_from(&mut self, c: f64, start: Option<&[f64]>) -> Result<SemiWaveOutcome> {
        let m = choose_m(c, self.d, &self.reaction)?;
        let n = self.grid.n_cells();
        let sigma = self.params.sigma_homotopy;
        let plateau_target = self.reaction.equilibrium;
        let threshold = plateau_target - self.params.plateau_eps;
        let tol = self.params.tol_iter;

        let mut phi = match start {
            Some(s) if s.len() == n + 1 => s.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            Some(s) => {
                return Err(invalid(format!("start profile has {} values, grid has {}", s.len(), n + 1)));
            }
            None => vec![1.0; n + 1],
        };
        phi[n] = sigma;
        let mut next = vec![0.0; n + 1];
        let mut max_upward_step: f64 = 0.0;
        let mut change = f64::INFINITY;
        let mut iterations = 0;

        while iterations < self.params.max_iters {
            self.apply(&phi, c, m, sigma, &mut next);
            iterations += 1;
            change = 0.0;
            for (a, b) in next.iter().zip(&phi) {
                change = change.max((a - b).abs());
                max_upward_step = max_upward_step.max(a - b);
            }
            std::mem::swap(&mut phi, &mut next);
            if phi[0] < threshold {
                debug!("c = {c}: plateau fell to {} after {iterations} iterations", phi[0]);
                return Ok(SemiWaveOutcome::NonExistence(NonExistence {
                    c,
                    plateau_value: phi[0],
                    plateau_target,
                    iterations,
                    fixed_point_defect: change,
                    reason: format!("plateau {} dropped below {threshold}", phi[0]),
                }));
            }
            if change < tol {
                break;
            }
        }
        if change >= tol {
            return Err(Error::NonConvergence {
                what: "semi-wave iteration",
                iterations,
                last_change: change,
            });
        }
        if max_upward_step > 1e-12 {
            warn!("c = {c}: iterates rose by {max_upward_step:e} (start was not an upper solution)");
        }

        self.apply(&phi, c, m, sigma, &mut next);
        let defect = next.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let plateau_value = phi[0];
        if defect >= 100.0 * tol {
            return Ok(SemiWaveOutcome::NonExistence(NonExistence {
                c,
                plateau_value,
                plateau_target,
                iterations,
                fixed_point_defect: defect,
                reason: format!("fixed-point defect {defect:e} too large"),
            }));
        }
        let residual = self.residual(&phi, c, sigma);
        Ok(SemiWaveOutcome::Accepted(SemiWaveProfile {
            grid: self.grid.clone(),
            phi,
            c,
            d: self.d,
            sigma,
            plateau_target,
            plateau_value,
            iterations_used: iterations,
            residual,
            fixed_point_defect: defect,
            max_upward_step,
            boundary_reaction: self.reaction.value(sigma),
        }))
    }

    pub fn solve(&mut self, c: f64) -> Result<SemiWaveOutcome> {
        self.solve_from(c, None)
    }
}

/// `A[φ]` on the parameter grid.
#[allow(clippy::too_many_arguments)]
pub fn apply_a(
    phi: &[f64],
    c: f64,
    d: f64,
    k: &Kernel,
    r: &Reaction,
    m: MConstant,
    sigma: f64,
    params: &SemiWaveParams,
) -> Result<Vec<f64>> {
    let mut solver = SemiWaveSolver::new(d, k, r, params)?;
    if phi.len() != solver.grid().len() {
        return Err(invalid(format!("profile has {} values, grid has {}", phi.len(), solver.grid().len())));
    }
    let mut out = vec![0.0; phi.len()];
    solver.apply(phi, c, m, sigma, &mut out);
    Ok(out)
}

pub fn solve_semiwave(c: f64, d: f64, k: &Kernel, r: &Reaction, params: &SemiWaveParams) -> Result<SemiWaveOutcome> {
    SemiWaveSolver::new(d, k, r, params)?.solve(c)
}

/// Profile shifted so that it crosses `1/2` at the origin.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ShiftedProfile {
    pub l: f64,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
}

pub fn half_level_shift(p: &SemiWaveProfile) -> Result<ShiftedProfile> {
    let n = p.phi.len() - 1;
    let j = (0..=n)
        .rev()
        .find(|&j| p.phi[j] >= 0.5)
        .ok_or(Error::NoCrossing { level: 0.5, plateau: p.plateau_value })?;
    let xj = p.grid.node(j);
    let l = if j == n || p.phi[j] == 0.5 {
        -xj
    } else {
        let t = (p.phi[j] - 0.5) / (p.phi[j] - p.phi[j + 1]);
        -(xj + t * p.grid.spacing())
    };
    Ok(ShiftedProfile {
        l,
        x: p.grid.nodes().map(|x| x + l).collect(),
        phi: p.phi.clone(),
    })
}

/// `φ'(0⁻)` from the equation at the boundary node.
pub fn front_slope(p: &SemiWaveProfile, d: f64, k: &Kernel) -> Result<f64> {
    let weighted: Vec<f64> = p.grid.nodes().zip(&p.phi).map(|(x, &v)| k.density(x) * v).collect();
    let inner = trapezoid(&p.grid, &weighted)? + p.plateau_target * k.tail_mass(p.grid.left());
    let phi0 = p.phi[p.phi.len() - 1];
    Ok((d * phi0 - d * inner - d * p.sigma * k.tail_mass(0.0) - p.boundary_reaction) / p.c)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CStarEstimate {
    /// Existence threshold from bisection on the acceptance predicate.
    pub threshold: f64,
    /// Largest accepted and smallest rejected speeds.
    pub bracket: (f64, f64),
    pub linear_oracle: Option<f64>,
    pub warning: Option<String>,
}

/// `min_λ [d(Ĵ(λ) - 1) + f'(0)] / λ` over rates with a finite moment.
pub fn linear_speed(d: f64, k: &Kernel, r: &Reaction) -> Result<Option<f64>> {
    let objective = |lambda: f64| -> f64 {
        match k.exp_moment(lambda) {
            Ok(v) if v.is_finite() => (d * (v - 1.0) + r.df0) / lambda,
            _ => f64::INFINITY,
        }
    };
    let abscissa = k.exp_moment_abscissa();
    if abscissa <= 0.0 {
        return Ok(None);
    }
    let lo = 1e-6;
    let hi = if abscissa.is_finite() {
        abscissa * (1.0 - 1e-9)
    } else {
        let mut hi = 1.0;
        while objective(2.0 * hi) < objective(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        2.0 * hi
    };
    let (_, value) = minimize_scalar(objective, lo, hi, 1e-10)?;
    Ok(Some(value))
}

/// Smallest speed without a semi-wave, found by bisection on acceptance.
pub fn estimate_cstar(d: f64, k: &Kernel, r: &Reaction, params: &SemiWaveParams, tol_c: f64) -> Result<CStarEstimate> {
    if !k.tail_class().has_exponential_moment() {
        return Err(Error::UnsupportedTail(k.tail_class()));
    }
    if !(tol_c > 0.0) {
        return Err(invalid("tol_c must be positive"));
    }
    let mut solver = SemiWaveSolver::new(d, k, r, params)?;
    let mut best: Option<Vec<f64>>;
    let mut accepts = |c: f64, warm: &Option<Vec<f64>>| -> Result<Option<Vec<f64>>> {
        match solver.solve_from(c, warm.as_deref()) {
            Ok(SemiWaveOutcome::Accepted(p)) => Ok(Some(p.phi)),
            Ok(SemiWaveOutcome::NonExistence(_)) => Ok(None),
            Err(Error::NonConvergence { iterations, last_change, .. }) => {
                debug!("c = {c}: no convergence after {iterations} iterations ({last_change:e}); treated as rejected");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    let mut lo = 0.1;
    match accepts(lo, &None)? {
        Some(p) => best = Some(p),
        None => return Err(invalid(format!("no semi-wave even at c = {lo}"))),
    }
    let mut hi = 1.0;
    loop {
        match accepts(hi, &best)? {
            Some(p) => {
                best = Some(p);
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(invalid("existence bracket grew past 1e6"));
                }
            }
            None => break,
        }
    }
    while hi - lo > tol_c {
        let mid = 0.5 * (lo + hi);
        match accepts(mid, &best)? {
            Some(p) => {
                best = Some(p);
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let threshold = 0.5 * (lo + hi);
    let linear_oracle = linear_speed(d, k, r)?;
    let warning = linear_oracle.and_then(|lin| {
        let rel = (threshold - lin).abs() / lin;
        (rel > 0.05).then(|| {
            let msg = format!("existence threshold {threshold} differs from the linear speed {lin} by {:.1}%", 100.0 * rel);
            warn!("{msg}");
            msg
        })
    });
    Ok(CStarEstimate {
        threshold,
        bracket: (lo, hi),
        linear_oracle,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_laplace, make_power, make_uniform};
    use crate::reaction::make_logistic;

    fn coarse() -> SemiWaveParams {
        SemiWaveParams {
            length: 30.0,
            n_cells: 600,
            ..SemiWaveParams::default()
        }
    }

    #[test]
    fn m_formula() {
        let r = make_logistic();
        assert!((choose_m(1.0, 1.0, &r).unwrap().m - 2.1).abs() < 1e-14);
        assert!((choose_m(2.0, 1.0, &r).unwrap().m - 1.05).abs() < 1e-14);
        assert!(choose_m(0.0, 1.0, &r).is_err());
    }

    #[test]
    fn exp_weights_integrate_linear_data() {
        let (m, h) = (2.1, 0.05);
        let (decay, alpha, beta) = exp_weights(m, h);
        assert!((decay - (-m * h).exp()).abs() < 1e-16);
        // ∫_0^h e^{-Mt} (2 + 3t) dt
        let exact = 2.0 * (1.0 - (-m * h).exp()) / m + 3.0 * (1.0 - (-m * h).exp() * (1.0 + m * h)) / (m * m);
        assert!((alpha * 2.0 + beta * (2.0 + 3.0 * h) - exact).abs() < 1e-15);
        let (_, a2, b2) = exp_weights(50.0, 0.05);
        let exact2 = (1.0 - (-2.5f64).exp()) / 50.0;
        assert!((a2 + b2 - exact2).abs() < 1e-15);
    }

    #[test]
    fn a_of_one_is_below_one() {
        let (k, r, p) = (make_laplace(), make_logistic(), coarse());
        let m = choose_m(1.0, 1.0, &r).unwrap();
        let ones = vec![1.0; p.n_cells + 1];
        let out = apply_a(&ones, 1.0, 1.0, &k, &r, m, 0.0, &p).unwrap();
        assert!(out[..p.n_cells].iter().all(|&v| v < 1.0));
        assert_eq!(out[p.n_cells], 0.0);
    }

    #[test]
    fn a_of_zero_is_far_field_only() {
        let (k, r, p) = (make_laplace(), make_logistic(), coarse());
        let m = choose_m(1.0, 1.0, &r).unwrap();
        let zeros = vec![0.0; p.n_cells + 1];
        let out = apply_a(&zeros, 1.0, 1.0, &k, &r, m, 0.0, &p).unwrap();
        let grid = p.grid().unwrap();
        for j in [0, 100, 300, 599] {
            let x = grid.node(j);
            // (e^{Mx}/c) ∫_x^0 e^{-Mξ} ½ e^{-(ξ+L)} dξ with c = 1
            let (mm, l) = (m.m, p.length);
            let exact = 0.5 * (-l).exp() * ((-x).exp() - (mm * x).exp()) / (mm + 1.0);
            assert!((out[j] - exact).abs() <= 1e-3 * exact, "{j}: {} vs {exact}", out[j]);
            assert!(out[j] > 0.0);
        }
    }

    #[test]
    fn operator_is_monotone() {
        let (k, r, p) = (make_laplace(), make_logistic(), coarse());
        let m = choose_m(1.3, 1.0, &r).unwrap();
        let grid = p.grid().unwrap();
        let lower: Vec<f64> = grid.nodes().map(|x| (-x / 3.0).tanh().min(1.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|v| (v + 0.2).min(1.0)).collect();
        let a = apply_a(&lower, 1.3, 1.0, &k, &r, m, 0.0, &p).unwrap();
        let b = apply_a(&upper, 1.3, 1.0, &k, &r, m, 0.0, &p).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
    }

    #[test]
    fn existence_below_and_collapse_above() {
        let (k, r, p) = (make_laplace(), make_logistic(), coarse());
        let prof = solve_semiwave(1.0, 1.0, &k, &r, &p).unwrap().accepted().unwrap();
        assert_eq!(*prof.phi.last().unwrap(), 0.0);
        assert!(prof.plateau_value >= 0.99);
        assert!(prof.phi.windows(2).all(|w| w[1] <= w[0]));
        assert!(prof.max_upward_step <= 1e-12);
        let out = solve_semiwave(3.0, 1.0, &k, &r, &p).unwrap();
        assert!(!out.is_accepted());
    }

    #[test]
    fn half_level_and_slope() {
        let (k, r, p) = (make_laplace(), make_logistic(), coarse());
        let prof = solve_semiwave(1.0, 1.0, &k, &r, &p).unwrap().accepted().unwrap();
        let s = half_level_shift(&prof).unwrap();
        assert!(s.l > 0.0);
        assert!((prof.value_at(-s.l) - 0.5).abs() < 1e-12);
        let slope = front_slope(&prof, 1.0, &k).unwrap();
        assert!(slope < 0.0);
        let h = prof.grid.spacing();
        let n = prof.phi.len() - 1;
        let fd = (prof.phi[n] - prof.phi[n - 1]) / h;
        assert!((fd - slope).abs() < 5.0 * h, "{fd} vs {slope}");
        let doubled = front_slope(&prof, 2.0, &k).unwrap();
        assert!((doubled - 2.0 * slope).abs() < 1e-14);
    }

    #[test]
    fn half_level_on_node() {
        let grid = UniformGrid::new(-4.0, 0.0, 4).unwrap();
        let prof = SemiWaveProfile {
            grid,
            phi: vec![1.0, 0.8, 0.5, 0.2, 0.0],
            c: 1.0,
            d: 1.0,
            sigma: 0.0,
            plateau_target: 1.0,
            plateau_value: 1.0,
            iterations_used: 0,
            residual: 0.0,
            fixed_point_defect: 0.0,
            max_upward_step: 0.0,
            boundary_reaction: 0.0,
        };
        assert_eq!(half_level_shift(&prof).unwrap().l, 2.0);
        let flat = SemiWaveProfile { phi: vec![0.4, 0.3, 0.2, 0.1, 0.0], ..prof };
        assert!(matches!(half_level_shift(&flat), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn linear_speed_closed_form() {
        let lin = linear_speed(1.0, &make_laplace(), &make_logistic()).unwrap().unwrap();
        assert!((lin - 1.5 * 3f64.sqrt()).abs() < 1e-8);
        let u = make_uniform(1.0).unwrap();
        let lin_u = linear_speed(1.0, &u, &make_logistic()).unwrap().unwrap();
        let (_, direct) = minimize_scalar(|l: f64| (l.sinh() / l) / l, 0.01, 10.0, 1e-12).unwrap();
        assert!((lin_u - direct).abs() < 1e-8);
        assert!(linear_speed(1.0, &make_power(2.0).unwrap(), &make_logistic()).unwrap().is_none());
    }

    #[test]
    fn cstar_rejects_heavy_tails() {
        let k = make_power(2.0).unwrap();
        let err = estimate_cstar(1.0, &k, &make_logistic(), &SemiWaveParams::for_kernel(&k), 0.01).unwrap_err();
        assert_eq!(err, Error::UnsupportedTail(TailClass::HeavyTailJ1Only));
    }

    #[test]
    fn params_validation() {
        assert!(SemiWaveParams { n_cells: 50, ..Default::default() }.validate().is_err());
        assert!(SemiWaveParams { plateau_eps: 0.2, ..Default::default() }.validate().is_err());
        assert_eq!(SemiWaveParams::for_kernel(&make_power(2.0).unwrap()).length, 400.0);
        assert_eq!(SemiWaveParams::for_kernel(&make_uniform(2.0).unwrap()).length, 42.0);
    }
}
