//! Explicit time stepping of the free-boundary problem
//!
//! ```text
//! u_t = d ∫_g^h J(x - y) u(t, y) dy - d u + f(u),   g(t) < x < h(t),
//! h' = μ ∫_g^h u(t, x) a(x - h) dx,
//! g' = -μ ∫_g^h u(t, x) a(g - x) dx,
//! ```
//!
//! on a fixed uniform grid `x_j = j·dx` with the fronts `g`, `h` kept as
//! real numbers. Nodes strictly inside `(g, h)` are active; the density is
//! piecewise linear between them and falls linearly to zero on the two
//! partial cells at the fronts.

use log::{debug, warn};

use crate::error::{invalid, Error, Result};
use crate::kernel::{hat_weights, truncate, Kernel, TailClass};
use crate::numerics::{fit_slope, ToeplitzConvolver};
use crate::reaction::{adjust_for_truncation, Reaction};
use crate::semiwave::SemiWaveParams;
use crate::speed::solve_c0;

/// Negative values above this are FFT round-off, not instability.
pub(crate) const ROUNDOFF: f64 = 1e-13;

/// Initial density `amplitude·(1 − (x/h0)²)₊`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Parabola {
    pub amplitude: f64,
}

impl Parabola {
    pub fn value(&self, x: f64, h0: f64) -> f64 {
        (self.amplitude * (1.0 - (x / h0).powi(2))).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimConfig {
    pub d: f64,
    pub mu: f64,
    pub h0: f64,
    pub t_end: f64,
    pub dx: f64,
    pub sample_dt: f64,
    /// Snapshot interval; `None` keeps only the final state.
    pub snap_dt: Option<f64>,
    /// Half-width of the computational grid. Required for fat tails.
    pub x_max: Option<f64>,
    /// Fixed time step; must respect the stability bound.
    pub dt: Option<f64>,
    /// Overrides the front-speed cap used in the step bound.
    pub v_cap: Option<f64>,
    pub initial: Parabola,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            mu: 1.0,
            h0: 10.0,
            t_end: 200.0,
            dx: 0.1,
            sample_dt: 0.5,
            snap_dt: None,
            x_max: None,
            dt: None,
            v_cap: None,
            initial: Parabola { amplitude: 1.0 },
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let positive = [
            ("d", self.d),
            ("h0", self.h0),
            ("t_end", self.t_end),
            ("dx", self.dx),
            ("sample_dt", self.sample_dt),
            ("amplitude", self.initial.amplitude),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            problems.push(format!("mu must be nonnegative, got {}", self.mu));
        }
        for (name, v) in [("snap_dt", self.snap_dt), ("x_max", self.x_max), ("dt", self.dt), ("v_cap", self.v_cap)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    problems.push(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.dx >= self.h0 {
            problems.push(format!("dx = {} must be smaller than h0 = {}", self.dx, self.h0));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }
}

/// Density on the active interval, with the fronts as zero end points.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FieldState {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl FieldState {
    pub fn sup(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }

    /// Minimum of `u` over nodes in `[-w, w]`.
    pub fn min_on(&self, w: f64) -> f64 {
        self.x
            .iter()
            .zip(&self.u)
            .filter(|(x, _)| x.abs() <= w)
            .map(|(_, &u)| u)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrontSample {
    pub t: f64,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
pub struct FrontTrajectory {
    pub samples: Vec<FrontSample>,
    pub snapshots: Vec<FieldState>,
}

impl FrontTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimReport {
    pub trajectory: FrontTrajectory,
    pub final_state: FieldState,
    /// Times a negative density was reset to zero.
    pub clamp_count: usize,
    pub max_u: f64,
    pub m0_star: f64,
    pub steps: usize,
    pub smallest_dt: f64,
    /// Largest `|g + h|` over all steps.
    pub max_asymmetry: f64,
}

/// View handed to observers at every sample time.
pub struct FieldView<'a> {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub dx: f64,
    /// Grid index of `u[0]`.
    pub first_index: i64,
    pub u: &'a [f64],
}

impl FieldView<'_> {
    /// Density at grid node `j`, zero outside the active range.
    pub fn at_node(&self, j: i64) -> f64 {
        let k = j - self.first_index;
        if k < 0 || k as usize >= self.u.len() {
            0.0
        } else {
            self.u[k as usize]
        }
    }
}

/// Stepping machinery shared by [`simulate`] and [`step`].
pub struct FreeBoundary {
    d: f64,
    mu: f64,
    reaction: Reaction,
    kernel: Kernel,
    dx: f64,
    n_half: i64,
    /// Density on all nodes `-n_half..=n_half`, zero outside `(g, h)`.
    u: Vec<f64>,
    pub g: f64,
    pub h: f64,
    pub t: f64,
    conv: ToeplitzConvolver,
    half: Vec<f64>,
    a_tab: Vec<f64>,
    j_tab: Vec<f64>,
    m0_star: f64,
    v_cap: Option<f64>,
    c_j: Option<f64>,
    scratch: Vec<f64>,
    pub clamp_count: usize,
    pub max_u: f64,
}

impl FreeBoundary {
    fn new(d: f64, mu: f64, k: &Kernel, r: &Reaction, dx: f64, x_max: f64, v_cap: Option<f64>) -> Result<Self> {
        let n_half = (x_max / dx).ceil() as i64;
        let n = (2 * n_half) as usize;
        let w = hat_weights(k, dx, n);
        let a_tab = (0..=n + 2).map(|m| k.tail_mass(-(m as f64) * dx)).collect();
        let j_tab = (0..=n + 2).map(|m| k.density(m as f64 * dx)).collect();
        let c_j = if k.tail_class().has_finite_first_moment() { Some(k.c_j()?) } else { None };
        Ok(Self {
            d,
            mu,
            reaction: r.clone(),
            kernel: k.clone(),
            dx,
            n_half,
            u: vec![0.0; n + 1],
            g: 0.0,
            h: 0.0,
            t: 0.0,
            conv: ToeplitzConvolver::new(w.full),
            half: w.half,
            a_tab,
            j_tab,
            m0_star: r.cap_k0,
            v_cap,
            c_j,
            scratch: Vec::new(),
            clamp_count: 0,
            max_u: 0.0,
        })
    }

    fn node(&self, j: i64) -> f64 {
        j as f64 * self.dx
    }

    fn idx(&self, j: i64) -> usize {
        (j + self.n_half) as usize
    }

    /// First and last grid index strictly inside `(g, h)`.
    fn active(&self) -> (i64, i64) {
        let ia = (self.g / self.dx).floor() as i64 + 1;
        let ib = (self.h / self.dx).ceil() as i64 - 1;
        (ia, ib)
    }

    fn front_speed_cap(&self) -> f64 {
        if let Some(v) = self.v_cap {
            return v;
        }
        let reach = match self.c_j {
            Some(c) => c,
            None => self.kernel.tail_integral(self.h - self.g + 2.0 * self.dx),
        };
        self.mu * self.m0_star * reach
    }

    /// `min(0.2/(d + K), 0.25·dx/V)`.
    pub fn stable_dt(&self) -> f64 {
        let react = 0.2 / (self.d + self.reaction.effective_lipschitz());
        let v = self.front_speed_cap();
        if v > 0.0 {
            react.min(0.25 * self.dx / v)
        } else {
            react
        }
    }

    pub fn view(&self) -> FieldView<'_> {
        let (ia, ib) = self.active();
        FieldView {
            t: self.t,
            g: self.g,
            h: self.h,
            dx: self.dx,
            first_index: ia,
            u: &self.u[self.idx(ia)..=self.idx(ib)],
        }
    }

    pub fn state(&self) -> FieldState {
        let (ia, ib) = self.active();
        let mut x = vec![self.g];
        let mut u = vec![0.0];
        for j in ia..=ib {
            x.push(self.node(j));
            u.push(self.u[self.idx(j)]);
        }
        x.push(self.h);
        u.push(0.0);
        FieldState { t: self.t, g: self.g, h: self.h, dx: self.dx, x, u }
    }

    /// `a(-(k + θ)·dx)` by cubic Hermite interpolation of the tables.
    fn hermite_weights(theta: f64) -> [f64; 4] {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + theta, -2.0 * t3 + 3.0 * t2, t3 - t2]
    }

    fn tail_between(&self, k: usize, hw: &[f64; 4]) -> f64 {
        let dx = self.dx;
        // q(s) = a(-s) has q' = -J
        hw[0] * self.a_tab[k] - hw[1] * dx * self.j_tab[k] + hw[2] * self.a_tab[k + 1] - hw[3] * dx * self.j_tab[k + 1]
    }

    /// Advances by `dt`, which must not exceed [`stable_dt`](Self::stable_dt).
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let bound = self.stable_dt();
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::UnstableStep { dt, bound });
        }
        let (ia, ib) = self.active();
        if ia > ib {
            return Err(invalid("no grid node inside the habitat; decrease dx"));
        }
        let (lo, hi) = (self.idx(ia), self.idx(ib));
        let len = hi - lo + 1;
        let dx = self.dx;
        let ell_l = self.node(ia) - self.g;
        let ell_r = self.h - self.node(ib);

        self.scratch.resize(len, 0.0);
        self.conv.apply(&self.u[lo..=hi], &mut self.scratch);
        let (u_first, u_last) = (self.u[lo], self.u[hi]);
        for (i, c) in self.scratch.iter_mut().enumerate() {
            let back = len - 1 - i;
            *c += -u_first * self.half[i] - u_last * self.half[back]
                + 0.5 * ell_l * self.j_tab[i] * u_first
                + 0.5 * ell_r * self.j_tab[back] * u_last;
        }

        let (flux_h, flux_g) = if self.mu > 0.0 {
            let hw_r = Self::hermite_weights(ell_r / dx);
            let hw_l = Self::hermite_weights(ell_l / dx);
            let weight = |m: usize, end: f64| -> f64 {
                if len == 1 {
                    0.5 * (ell_l + ell_r)
                } else if m == 0 {
                    0.5 * (dx + end)
                } else if m == len - 1 {
                    // the far end carries the other partial cell
                    0.5 * (dx + if end == ell_r { ell_l } else { ell_r })
                } else {
                    dx
                }
            };
            let mut fh = 0.0;
            let mut fg = 0.0;
            for m in 0..len {
                fh += weight(m, ell_r) * self.u[hi - m] * self.tail_between(m, &hw_r);
                fg += weight(m, ell_l) * self.u[lo + m] * self.tail_between(m, &hw_l);
            }
            (fh, fg)
        } else {
            (0.0, 0.0)
        };

        let d = self.d;
        for (m, c) in self.scratch.iter().enumerate() {
            let u = self.u[lo + m];
            let mut next = u + dt * (d * c - d * u + self.reaction.value(u));
            if next < 0.0 {
                if next < -ROUNDOFF {
                    self.clamp_count += 1;
                }
                next = 0.0;
            }
            self.max_u = self.max_u.max(next);
            self.u[lo + m] = next;
        }
        self.h += dt * self.mu * flux_h;
        self.g -= dt * self.mu * flux_g;
        self.t += dt;

        let (na, nb) = self.active();
        if na <= -self.n_half || nb >= self.n_half {
            return Err(Error::DomainExhausted { t: self.t });
        }
        Ok(())
    }
}

fn domain_half_width(cfg: &SimConfig, k: &Kernel, m0_star: f64) -> Result<f64> {
    if let Some(x) = cfg.x_max {
        return Ok(x);
    }
    if k.tail_class() == TailClass::FatTail {
        return Err(invalid("x_max must be given for fat-tailed kernels"));
    }
    let reach = cfg.v_cap.unwrap_or(cfg.mu * m0_star * k.c_j()?);
    Ok(cfg.h0 + reach * cfg.t_end + 10.0 * cfg.dx)
}

/// Runs to `t_end`, calling `observer` at every sample time (including 0).
pub fn simulate_with(
    cfg: &SimConfig,
    k: &Kernel,
    r: &Reaction,
    mut observer: impl FnMut(&FieldView<'_>),
) -> Result<SimReport> {
    cfg.validate()?;
    let m0_star = cfg.initial.amplitude.max(r.cap_k0);
    let x_max = domain_half_width(cfg, k, m0_star)?;
    if x_max <= cfg.h0 + 2.0 * cfg.dx {
        return Err(invalid(format!("x_max = {x_max} leaves no room beyond h0 = {}", cfg.h0)));
    }
    let mut fb = FreeBoundary::new(cfg.d, cfg.mu, k, r, cfg.dx, x_max, cfg.v_cap)?;
    fb.m0_star = m0_star;
    fb.g = -cfg.h0;
    fb.h = cfg.h0;
    let (ia, ib) = fb.active();
    for j in ia..=ib {
        let i = fb.idx(j);
        fb.u[i] = cfg.initial.value(fb.node(j), cfg.h0);
    }
    fb.max_u = fb.u.iter().copied().fold(0.0, f64::max);

    let mut traj = FrontTrajectory::default();
    let record = |fb: &FreeBoundary, traj: &mut FrontTrajectory| {
        traj.samples.push(FrontSample { t: fb.t, g: fb.g, h: fb.h });
    };
    record(&fb, &mut traj);
    observer(&fb.view());
    if cfg.snap_dt.is_some() {
        traj.snapshots.push(fb.state());
    }

    let n_samples = (cfg.t_end / cfg.sample_dt - 1e-9).ceil() as usize;
    let snap_every = cfg.snap_dt.map(|s| ((s / cfg.sample_dt).round() as usize).max(1));
    let mut steps = 0;
    let mut smallest_dt = f64::INFINITY;
    let mut max_asymmetry: f64 = 0.0;
    for k_sample in 1..=n_samples {
        let target = (k_sample as f64 * cfg.sample_dt).min(cfg.t_end);
        while fb.t < target {
            let bound = fb.stable_dt();
            let dt = match cfg.dt {
                Some(dt) if dt > bound * (1.0 + 1e-12) => return Err(Error::UnstableStep { dt, bound }),
                Some(dt) => dt,
                None => bound,
            };
            let remaining = target - fb.t;
            let this_dt = if remaining <= dt { remaining } else { dt };
            fb.step(this_dt)?;
            if this_dt == remaining {
                fb.t = target;
            }
            steps += 1;
            smallest_dt = smallest_dt.min(this_dt);
            max_asymmetry = max_asymmetry.max((fb.g + fb.h).abs());
        }
        record(&fb, &mut traj);
        observer(&fb.view());
        if let Some(every) = snap_every {
            if k_sample % every == 0 {
                traj.snapshots.push(fb.state());
            }
        }
    }
    if fb.clamp_count > 0 {
        warn!("density clamped at zero {} times", fb.clamp_count);
    }
    debug!("simulation finished after {steps} steps, h = {}", fb.h);
    Ok(SimReport {
        final_state: fb.state(),
        trajectory: traj,
        clamp_count: fb.clamp_count,
        max_u: fb.max_u,
        m0_star,
        steps,
        smallest_dt,
        max_asymmetry,
    })
}

pub fn simulate(cfg: &SimConfig, k: &Kernel, r: &Reaction) -> Result<SimReport> {
    simulate_with(cfg, k, r, |_| {})
}

/// One explicit step from a stand-alone state.
pub fn step(s: &FieldState, dt: f64, d: f64, mu: f64, k: &Kernel, r: &Reaction) -> Result<FieldState> {
    if s.x.len() != s.u.len() || s.x.len() < 3 {
        return Err(invalid("state needs matching x and u with at least one interior node"));
    }
    let x_max = s.g.abs().max(s.h.abs()) + 16.0 * s.dx;
    let mut fb = FreeBoundary::new(d, mu, k, r, s.dx, x_max, None)?;
    fb.g = s.g;
    fb.h = s.h;
    fb.t = s.t;
    fb.m0_star = s.sup().max(r.cap_k0);
    let (ia, ib) = fb.active();
    if (ib - ia + 1) as usize != s.u.len() - 2 {
        return Err(invalid("state nodes do not match the active grid of (g, h)"));
    }
    for (m, j) in (ia..=ib).enumerate() {
        let i = fb.idx(j);
        fb.u[i] = s.u[m + 1];
    }
    fb.step(dt)?;
    Ok(fb.state())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum OutcomeTag {
    Spreading,
    Vanishing,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OutcomeThresholds {
    /// Spreading needs `h − g >= span_factor·h0`.
    pub span_factor: f64,
    pub core_eps: f64,
    pub vanish_eps: f64,
    pub stall_eps: f64,
}

impl Default for OutcomeThresholds {
    fn default() -> Self {
        Self {
            span_factor: 10.0,
            core_eps: 0.05,
            vanish_eps: 1e-6,
            stall_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Outcome {
    pub tag: OutcomeTag,
    pub span: f64,
    pub sup_u: f64,
    pub core_min: f64,
    /// `h' + |g'|` over the final tenth of the samples.
    pub front_speed: f64,
}

pub fn classify_outcome(traj: &FrontTrajectory, last: &FieldState, h0: f64, th: &OutcomeThresholds) -> Outcome {
    let span = last.h - last.g;
    let sup_u = last.sup();
    let core_min = last.min_on(h0);
    let front_speed = match traj.samples.len() {
        0 | 1 => 0.0,
        n => {
            let a = traj.samples[(n - 1) - ((n - 1) / 10).max(1)];
            let b = traj.samples[n - 1];
            ((b.h - a.h) + (a.g - b.g)) / (b.t - a.t)
        }
    };
    let tag = if span >= th.span_factor * h0 && core_min >= 1.0 - th.core_eps {
        OutcomeTag::Spreading
    } else if sup_u <= th.vanish_eps && front_speed <= th.stall_eps {
        OutcomeTag::Vanishing
    } else {
        OutcomeTag::Undecided
    };
    Outcome { tag, span, sup_u, core_min, front_speed }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpeedMeasurement {
    pub slope_h: f64,
    pub slope_g: f64,
    /// Slopes of `h` over `[T/2^n, 2T/2^n], ..., [T/2, T]`.
    pub dyadic_slopes: Vec<f64>,
}

pub const DYADIC_WINDOWS: usize = 4;

pub fn measure_speed(traj: &FrontTrajectory, window_fraction: f64) -> Result<SpeedMeasurement> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(invalid("window_fraction must lie in (0, 1]"));
    }
    let s = &traj.samples;
    if s.len() < 2 {
        return Err(Error::InsufficientData("trajectory has fewer than two samples".into()));
    }
    let t_end = s[s.len() - 1].t;
    let t0 = s[0].t;
    let select = |from: f64, to: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut ts = Vec::new();
        let mut hs = Vec::new();
        let mut gs = Vec::new();
        for p in s.iter().filter(|p| p.t >= from - 1e-12 && p.t <= to + 1e-12) {
            ts.push(p.t);
            hs.push(p.h);
            gs.push(p.g);
        }
        (ts, hs, gs)
    };
    let (ts, hs, gs) = select(t_end - window_fraction * (t_end - t0), t_end);
    if ts.len() < 2 {
        return Err(Error::InsufficientData("final window holds fewer than two samples".into()));
    }
    let slope_h = fit_slope(&ts, &hs)?;
    let slope_g = fit_slope(&ts, &gs)?;
    let tau = t_end / (1u64 << DYADIC_WINDOWS) as f64;
    let mut dyadic_slopes = Vec::with_capacity(DYADIC_WINDOWS);
    for k in 1..=DYADIC_WINDOWS {
        let (from, to) = ((1u64 << (k - 1)) as f64 * tau, (1u64 << k) as f64 * tau);
        let (ts, hs, _) = select(from, to);
        if ts.len() < 2 {
            return Err(Error::InsufficientData(format!("dyadic window [{from}, {to}] holds fewer than two samples")));
        }
        dyadic_slopes.push(fit_slope(&ts, &hs)?);
    }
    Ok(SpeedMeasurement { slope_h, slope_g, dyadic_slopes })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TruncatedSpeed {
    pub radius: f64,
    pub sigma_n: f64,
    pub eta_n: f64,
    pub c_n: f64,
    pub residual: f64,
}

/// Spreading speeds for the kernels `J·ξ_R`, each solved as a compactly
/// supported problem with kernel `J_R/σ_R`, rates `dσ_R`, `μσ_R` and
/// reaction `f − d(1 − σ_R)u`.
#[allow(clippy::too_many_arguments)]
pub fn truncated_speed_sequence(
    k: &Kernel,
    radii: &[f64],
    ramp: f64,
    d: f64,
    mu: f64,
    r: &Reaction,
    template: &SemiWaveParams,
    tol: f64,
) -> Result<Vec<Result<TruncatedSpeed>>> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("radii must be strictly increasing"));
    }
    use rayon::prelude::*;
    Ok(radii
        .par_iter()
        .map(|&radius| {
            let tk = truncate(k, radius, ramp)?;
            let adjusted = adjust_for_truncation(r, 1.0 - d * (1.0 - tk.sigma_n))?;
            let params = SemiWaveParams {
                length: SemiWaveParams::for_kernel(tk.normalized()).length.max(template.length),
                ..template.clone()
            };
            let s = solve_c0(mu * tk.sigma_n, d * tk.sigma_n, tk.normalized(), adjusted.reaction(), &params, tol)?;
            Ok(TruncatedSpeed {
                radius,
                sigma_n: tk.sigma_n,
                eta_n: adjusted.eta_n,
                c_n: s.c0,
                residual: s.residual,
            })
        })
        .collect())
}

/// Top eigenvalue of `φ ↦ d∫_{-ℓ}^{ℓ} J(x−y)φ(y)dy − dφ + a_const·φ`.
pub fn principal_eigenvalue(ell: f64, d: f64, k: &Kernel, a_const: f64, n_cells: usize) -> Result<f64> {
    if !(ell > 0.0) {
        return Err(invalid(format!("ell must be positive, got {ell}")));
    }
    if n_cells < 2 {
        return Err(invalid("n_cells must be at least 2"));
    }
    let dx = 2.0 * ell / n_cells as f64;
    let mut op = NonlocalMatrix::new(k, dx, n_cells);
    let mut v: Vec<f64> = (0..=n_cells)
        .map(|j| (std::f64::consts::FRAC_PI_2 * (-ell + j as f64 * dx) / ell).cos().max(0.0) + 1e-3)
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut w = vec![0.0; n_cells + 1];
    let mut lambda = 0.0;
    let max_iter = 1_000_000;
    let mut change = f64::INFINITY;
    for it in 0..max_iter {
        op.apply(&v, &mut w);
        let estimate = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(a_const - d);
        }
        let mut diff: f64 = 0.0;
        for (a, b) in v.iter_mut().zip(&w) {
            let next = b / nw;
            diff = diff.max((next - *a).abs());
            *a = next;
        }
        change = (estimate - lambda).abs();
        lambda = estimate;
        if it > 2 && change <= 1e-14 * lambda.abs().max(1e-300) && diff < 1e-10 {
            return Ok(d * lambda - d + a_const);
        }
    }
    Err(Error::NonConvergence { what: "power iteration", iterations: max_iter, last_change: change })
}

/// Hat-weight discretization of `φ ↦ ∫_{-ℓ}^{ℓ} J(x−y)φ(y)dy` on a uniform grid.
pub(crate) struct NonlocalMatrix {
    conv: ToeplitzConvolver,
    half: Vec<f64>,
}

impl NonlocalMatrix {
    pub(crate) fn new(k: &Kernel, dx: f64, n_cells: usize) -> Self {
        let w = hat_weights(k, dx, n_cells);
        Self { conv: ToeplitzConvolver::new(w.full), half: w.half }
    }

    pub(crate) fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        let n = v.len() - 1;
        self.conv.apply(v, out);
        for (i, o) in out.iter_mut().enumerate() {
            *o -= v[0] * self.half[i] + v[n] * self.half[n - i];
        }
    }

    #[cfg(test)]
    pub(crate) fn dense(&mut self, n: usize) -> Vec<Vec<f64>> {
        let mut cols = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mut e = vec![0.0; n + 1];
            e[j] = 1.0;
            let mut out = vec![0.0; n + 1];
            self.apply(&e, &mut out);
            cols.push(out);
        }
        cols
    }
}
