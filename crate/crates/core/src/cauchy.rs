//! Whole-line problem `u_t = d(J*u − u) + f(u)` on a truncated line, and the
//! comparison of free-boundary solutions with it as `μ` grows.

use log::warn;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fbsim::{simulate_with, NonlocalMatrix, Parabola, SimConfig, ROUNDOFF};
use crate::kernel::Kernel;
use crate::numerics::UniformGrid;
use crate::reaction::Reaction;
use crate::semiwave::linear_speed;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CauchyConfig {
    pub d: f64,
    /// Initial data `amplitude·(1 − (x/h0)²)₊`.
    pub h0: f64,
    pub initial: Parabola,
    pub t_end: f64,
    pub dx: f64,
    pub sample_dt: f64,
    pub snap_dt: Option<f64>,
    /// Defaults to `8·T` times the linear spreading speed; required when
    /// that speed is infinite.
    pub x_max: Option<f64>,
    pub dt: Option<f64>,
    pub level: f64,
    pub boundary_eps: f64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            h0: 10.0,
            initial: Parabola { amplitude: 1.0 },
            t_end: 50.0,
            dx: 0.1,
            sample_dt: 0.5,
            snap_dt: None,
            x_max: None,
            dt: None,
            level: 0.5,
            boundary_eps: 1e-6,
        }
    }
}

impl CauchyConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [
            ("d", self.d),
            ("h0", self.h0),
            ("amplitude", self.initial.amplitude),
            ("t_end", self.t_end),
            ("dx", self.dx),
            ("sample_dt", self.sample_dt),
            ("boundary_eps", self.boundary_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("snap_dt", self.snap_dt), ("x_max", self.x_max), ("dt", self.dt)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    problems.push(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            problems.push(format!("level must lie in (0, 1), got {}", self.level));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CauchyState {
    pub grid: UniformGrid,
    pub u: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LevelSample {
    pub t: f64,
    pub x_minus: f64,
    pub x_plus: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LevelSetTrack {
    pub lambda: f64,
    pub samples: Vec<LevelSample>,
}

impl LevelSetTrack {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn plus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x_plus).collect()
    }
}

/// Outermost crossings of `u = λ`, linearly interpolated; `None` when the
/// level is not attained.
pub fn level_crossings(grid: &UniformGrid, u: &[f64], lambda: f64) -> Option<(f64, f64)> {
    let first = u.iter().position(|&v| v >= lambda)?;
    let last = u.iter().rposition(|&v| v >= lambda)?;
    let dx = grid.spacing();
    let x_minus = if first == 0 {
        grid.node(0)
    } else {
        let (a, b) = (u[first - 1], u[first]);
        grid.node(first) - dx * (b - lambda) / (b - a)
    };
    let x_plus = if last + 1 == u.len() {
        grid.node(last)
    } else {
        let (a, b) = (u[last], u[last + 1]);
        grid.node(last) + dx * (a - lambda) / (a - b)
    };
    Some((x_minus, x_plus))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CauchyReport {
    pub track: LevelSetTrack,
    pub snapshots: Vec<CauchyState>,
    pub final_state: CauchyState,
    /// Largest density seen at either end of the grid.
    pub boundary_max: f64,
    pub domain_too_small: bool,
    pub clamp_count: usize,
    pub max_u: f64,
    pub steps: usize,
}

const NOISE_FLOOR: f64 = 1e-13;

/// Explicit Euler stepper on a fixed grid.
pub struct CauchySolver {
    op: NonlocalMatrix,
    reaction: Reaction,
    d: f64,
    scratch: Vec<f64>,
    /// Values below this fraction of `max u` are reset to zero.
    pub noise_floor: f64,
    pub clamp_count: usize,
}

impl CauchySolver {
    pub fn new(grid: &UniformGrid, d: f64, k: &Kernel, r: &Reaction) -> Self {
        Self {
            op: NonlocalMatrix::new(k, grid.spacing(), grid.n_cells()),
            reaction: r.clone(),
            d,
            scratch: vec![0.0; grid.len()],
            noise_floor: NOISE_FLOOR,
            clamp_count: 0,
        }
    }

    pub fn stable_dt(&self) -> f64 {
        0.2 / (self.d + self.reaction.effective_lipschitz())
    }

    pub fn step(&mut self, s: &mut CauchyState, dt: f64) {
        self.op.apply(&s.u, &mut self.scratch);
        let d = self.d;
        // FFT round-off in the empty far field would otherwise grow like e^{f'(0)t}
        let floor = self.noise_floor * s.u.iter().copied().fold(0.0, f64::max);
        for (u, c) in s.u.iter_mut().zip(&self.scratch) {
            if *u < floor && *c < floor {
                *u = 0.0;
                continue;
            }
            let mut next = *u + dt * (d * c - d * *u + self.reaction.value(*u));
            if next < 0.0 {
                if next < -ROUNDOFF {
                    self.clamp_count += 1;
                }
                next = 0.0;
            }
            *u = next;
        }
        s.t += dt;
    }
}

/// Single explicit step; rejects `dt` above the stability bound.
pub fn cauchy_step(s: &CauchyState, dt: f64, d: f64, k: &Kernel, r: &Reaction) -> Result<CauchyState> {
    let mut solver = CauchySolver::new(&s.grid, d, k, r);
    let bound = solver.stable_dt();
    if dt > bound * (1.0 + 1e-12) {
        return Err(crate::Error::UnstableStep { dt, bound });
    }
    let mut next = s.clone();
    solver.step(&mut next, dt);
    Ok(next)
}

fn cauchy_grid(cfg: &CauchyConfig, k: &Kernel, r: &Reaction) -> Result<UniformGrid> {
    let x_max = match cfg.x_max {
        Some(x) => x,
        None => match linear_speed(cfg.d, k, r)? {
            Some(c) => 8.0 * cfg.t_end * c,
            None => return Err(invalid(format!("x_max must be given for kernel {}", k.name()))),
        },
    };
    if x_max < 2.0 * cfg.h0 {
        return Err(invalid(format!("initial support [-{0}, {0}] must lie inside [-x_max/2, x_max/2]", cfg.h0)));
    }
    let n_half = (x_max / cfg.dx).round().max(1.0) as usize;
    let half = n_half as f64 * cfg.dx;
    UniformGrid::new(-half, half, 2 * n_half)
}

/// Runs to `t_end`, calling `observer` at each sample time.
pub fn cauchy_simulate_with(
    cfg: &CauchyConfig,
    k: &Kernel,
    r: &Reaction,
    mut observer: impl FnMut(&CauchyState),
) -> Result<CauchyReport> {
    cfg.validate()?;
    let grid = cauchy_grid(cfg, k, r)?;
    let mut solver = CauchySolver::new(&grid, cfg.d, k, r);
    let bound = solver.stable_dt();
    let dt = match cfg.dt {
        Some(dt) if dt > bound * (1.0 + 1e-12) => return Err(crate::Error::UnstableStep { dt, bound }),
        Some(dt) => dt,
        None => bound,
    };
    let u = grid.nodes().map(|x| cfg.initial.value(x, cfg.h0)).collect();
    let mut s = CauchyState { grid, u, t: 0.0 };
    let mut track = LevelSetTrack { lambda: cfg.level, samples: Vec::new() };
    let mut snapshots = Vec::new();
    let mut boundary_max: f64 = 0.0;
    let mut max_u = s.u.iter().copied().fold(0.0, f64::max);
    let mut record = |s: &CauchyState, track: &mut LevelSetTrack| {
        if let Some((x_minus, x_plus)) = level_crossings(&s.grid, &s.u, cfg.level) {
            track.samples.push(LevelSample { t: s.t, x_minus, x_plus });
        }
        observer(s);
    };
    record(&s, &mut track);
    if cfg.snap_dt.is_some() {
        snapshots.push(s.clone());
    }

    let n_samples = (cfg.t_end / cfg.sample_dt - 1e-9).ceil() as usize;
    let snap_every = cfg.snap_dt.map(|v| ((v / cfg.sample_dt).round() as usize).max(1));
    let mut steps = 0;
    for k_sample in 1..=n_samples {
        let target = (k_sample as f64 * cfg.sample_dt).min(cfg.t_end);
        while s.t < target {
            let remaining = target - s.t;
            let this_dt = if remaining <= dt { remaining } else { dt };
            solver.step(&mut s, this_dt);
            if this_dt == remaining {
                s.t = target;
            }
            steps += 1;
            boundary_max = boundary_max.max(s.u[0]).max(s.u[s.u.len() - 1]);
            max_u = s.u.iter().copied().fold(max_u, f64::max);
        }
        record(&s, &mut track);
        if let Some(every) = snap_every {
            if k_sample % every == 0 {
                snapshots.push(s.clone());
            }
        }
    }
    let domain_too_small = boundary_max > cfg.boundary_eps;
    if domain_too_small {
        warn!("density reached {boundary_max:e} at the grid ends; enlarge x_max");
    }
    Ok(CauchyReport {
        track,
        snapshots,
        final_state: s,
        boundary_max,
        domain_too_small,
        clamp_count: solver.clamp_count,
        max_u,
        steps,
    })
}

pub fn cauchy_simulate(cfg: &CauchyConfig, k: &Kernel, r: &Reaction) -> Result<CauchyReport> {
    cauchy_simulate_with(cfg, k, r, |_| {})
}

/// Shared setup for [`compare_mu_limit`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MuLimitConfig {
    pub d: f64,
    pub h0: f64,
    pub initial: Parabola,
    pub t_end: f64,
    pub dx: f64,
    pub sample_dt: f64,
    /// Comparison window `[-window, window]`.
    pub window: f64,
    pub fb_x_max: f64,
    pub cauchy_x_max: Option<f64>,
    /// Common time step; defaults to the smallest stable step over all runs.
    pub dt: Option<f64>,
}

impl Default for MuLimitConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            h0: 10.0,
            initial: Parabola { amplitude: 1.0 },
            t_end: 20.0,
            dx: 0.1,
            sample_dt: 0.1,
            window: 20.0,
            fb_x_max: 100.0,
            cauchy_x_max: None,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MuLimitEntry {
    pub mu: f64,
    /// `sup (u_μ − u_*)₊` over the window.
    pub excess: f64,
    /// `sup |u_μ − u_*|` over the window.
    pub sup_diff: f64,
    pub h_end: f64,
    pub g_end: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MuLimitReport {
    pub dt: f64,
    pub entries: Vec<MuLimitEntry>,
    pub cauchy_domain_too_small: bool,
}

/// Window values sampled at every sample time.
type WindowSeries = Vec<(f64, Vec<f64>)>;

pub fn compare_mu_limit(mus: &[f64], cfg: &MuLimitConfig, k: &Kernel, r: &Reaction) -> Result<MuLimitReport> {
    if mus.is_empty() || mus.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(invalid("mus must be a nonempty list of positive values"));
    }
    if !(cfg.window > 0.0 && cfg.window < cfg.fb_x_max) {
        return Err(invalid("window must be positive and inside the free-boundary grid"));
    }
    let ratio = cfg.window / cfg.dx;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(invalid("window must be a whole number of grid cells"));
    }
    let w_nodes = ratio.round() as i64;

    let fb_cfg = |mu: f64| SimConfig {
        d: cfg.d,
        mu,
        h0: cfg.h0,
        t_end: cfg.t_end,
        dx: cfg.dx,
        sample_dt: cfg.sample_dt,
        snap_dt: None,
        x_max: Some(cfg.fb_x_max),
        dt: None,
        v_cap: None,
        initial: cfg.initial,
    };
    let cauchy_cfg = CauchyConfig {
        d: cfg.d,
        h0: cfg.h0,
        initial: cfg.initial,
        t_end: cfg.t_end,
        dx: cfg.dx,
        sample_dt: cfg.sample_dt,
        snap_dt: None,
        x_max: cfg.cauchy_x_max,
        dt: None,
        level: 0.5,
        boundary_eps: 1e-6,
    };
    let dt = match cfg.dt {
        Some(dt) => dt,
        None => {
            let m0_star = cfg.initial.amplitude.max(r.cap_k0);
            let mu_max = mus.iter().copied().fold(0.0, f64::max);
            let react = 0.2 / (cfg.d + r.effective_lipschitz());
            let reach = if k.tail_class().has_finite_first_moment() {
                k.c_j()?
            } else {
                k.tail_integral(2.0 * cfg.fb_x_max)
            };
            react.min(0.25 * cfg.dx / (mu_max * m0_star * reach))
        }
    };

    let fb_runs: Vec<Result<(WindowSeries, f64, f64)>> = mus
        .par_iter()
        .map(|&mu| {
            let mut series = Vec::new();
            let run = SimConfig { dt: Some(dt), ..fb_cfg(mu) };
            let rep = simulate_with(&run, k, r, |v| {
                series.push((v.t, (-w_nodes..=w_nodes).map(|j| v.at_node(j)).collect()));
            })?;
            Ok((series, rep.final_state.h, rep.final_state.g))
        })
        .collect();

    let mut star: WindowSeries = Vec::new();
    let crep = cauchy_simulate_with(&CauchyConfig { dt: Some(dt), ..cauchy_cfg }, k, r, |s| {
        let n_half = (s.grid.n_cells() / 2) as i64;
        star.push((s.t, (-w_nodes..=w_nodes).map(|j| s.u[(j + n_half) as usize]).collect()));
    })?;

    let mut entries = Vec::with_capacity(mus.len());
    for (&mu, run) in mus.iter().zip(fb_runs) {
        let (series, h_end, g_end) = run?;
        if series.len() != star.len() {
            return Err(invalid("free-boundary and whole-line runs sampled at different times"));
        }
        let mut excess: f64 = 0.0;
        let mut sup_diff: f64 = 0.0;
        for ((t_fb, a), (t_c, b)) in series.iter().zip(&star) {
            if (t_fb - t_c).abs() > 1e-9 * t_c.max(1.0) {
                return Err(invalid("free-boundary and whole-line runs sampled at different times"));
            }
            for (x, y) in a.iter().zip(b) {
                excess = excess.max(x - y);
                sup_diff = sup_diff.max((x - y).abs());
            }
        }
        entries.push(MuLimitEntry { mu, excess, sup_diff, h_end, g_end });
    }
    Ok(MuLimitReport { dt, entries, cauchy_domain_too_small: crep.domain_too_small })
}
