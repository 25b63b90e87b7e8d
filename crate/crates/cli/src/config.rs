//! Run configuration: a TOML file with one table per concern.
//!
//! ```toml
//! experiment = "linear-speed"
//!
//! [kernel]
//! family = "power"
//! sigma = 0.8
//!
//! [model]
//! d = 1.0
//! mu = 1.0
//! h0 = 10.0
//! ```
//!
//! Every table is optional and every key has a default. Unknown keys,
//! duplicate keys and type mismatches are rejected by the parser; value
//! constraints are checked afterwards and reported together.

use std::path::PathBuf;

use frontlab_core::cauchy::{CauchyConfig, MuLimitConfig};
use frontlab_core::fbsim::{OutcomeThresholds, Parabola, SimConfig};
use frontlab_core::kernel::{make_gaussian, make_laplace, make_power, make_uniform, Kernel};
use frontlab_core::reaction::{make_logistic, validate_kpp, Reaction};
use frontlab_core::semiwave::SemiWaveParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Laplace {},
    Gaussian { sd: f64 },
    Uniform { radius: f64 },
    Power { sigma: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::Laplace {}
    }
}

impl KernelSpec {
    pub fn build(&self) -> frontlab_core::Result<Kernel> {
        match *self {
            Self::Laplace {} => Ok(make_laplace()),
            Self::Gaussian { sd } => make_gaussian(sd),
            Self::Uniform { radius } => make_uniform(radius),
            Self::Power { sigma } => make_power(sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReactionSpec {
    Logistic {},
    /// `f(u) = Σ coefficients[i]·u^i`.
    Custom { coefficients: Vec<f64> },
}

impl Default for ReactionSpec {
    fn default() -> Self {
        Self::Logistic {}
    }
}

impl ReactionSpec {
    pub fn build(&self) -> frontlab_core::Result<Reaction> {
        match self {
            Self::Logistic {} => Ok(make_logistic()),
            Self::Custom { coefficients } => Reaction::polynomial("custom", coefficients.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `amplitude·(1 − (x/h0)²)₊`
    Parabola { amplitude: f64 },
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self::Parabola { amplitude: 1.0 }
    }
}

impl InitialSpec {
    pub fn parabola(&self) -> Parabola {
        match *self {
            Self::Parabola { amplitude } => Parabola { amplitude },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d: f64,
    pub mu: f64,
    pub h0: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { d: 1.0, mu: 1.0, h0: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub t_end: f64,
    pub dx: f64,
    pub sample_dt: f64,
    pub snap_dt: Option<f64>,
    pub x_max: Option<f64>,
    pub dt: Option<f64>,
    pub v_cap: Option<f64>,
    pub window_fraction: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            t_end: s.t_end,
            dx: s.dx,
            sample_dt: s.sample_dt,
            snap_dt: None,
            x_max: None,
            dt: None,
            v_cap: None,
            window_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiWaveSection {
    /// Domain depth; defaults by tail class when absent.
    pub length: Option<f64>,
    pub n_cells: usize,
    pub sigma_homotopy: f64,
    pub tol_iter: f64,
    pub max_iters: usize,
    pub plateau_eps: f64,
    /// Speed used by the `semiwave` command.
    pub c: f64,
}

impl Default for SemiWaveSection {
    fn default() -> Self {
        let p = SemiWaveParams::default();
        Self {
            length: None,
            n_cells: p.n_cells,
            sigma_homotopy: p.sigma_homotopy,
            tol_iter: p.tol_iter,
            max_iters: p.max_iters,
            plateau_eps: p.plateau_eps,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedSection {
    pub tol: f64,
    pub mus: Vec<f64>,
    pub tol_cstar: f64,
}

impl Default for SpeedSection {
    fn default() -> Self {
        Self { tol: 1e-9, mus: vec![1.0, 10.0, 100.0, 1000.0], tol_cstar: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub radii: Vec<f64>,
    pub ramp: f64,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { radii: vec![10.0, 20.0, 40.0, 80.0], ramp: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchySection {
    pub t_end: f64,
    pub dx: f64,
    pub sample_dt: f64,
    pub snap_dt: Option<f64>,
    pub x_max: Option<f64>,
    pub dt: Option<f64>,
    pub level: f64,
    pub boundary_eps: f64,
}

impl Default for CauchySection {
    fn default() -> Self {
        let c = CauchyConfig::default();
        Self {
            t_end: c.t_end,
            dx: c.dx,
            sample_dt: c.sample_dt,
            snap_dt: None,
            x_max: None,
            dt: None,
            level: c.level,
            boundary_eps: c.boundary_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuLimitSection {
    pub mus: Vec<f64>,
    pub t_end: f64,
    pub dx: f64,
    pub sample_dt: f64,
    pub window: f64,
    pub fb_x_max: f64,
    pub cauchy_x_max: Option<f64>,
    pub dt: Option<f64>,
}

impl Default for MuLimitSection {
    fn default() -> Self {
        let m = MuLimitConfig::default();
        Self {
            mus: vec![1.0, 10.0, 100.0],
            t_end: m.t_end,
            dx: m.dx,
            sample_dt: m.sample_dt,
            window: m.window,
            fb_x_max: m.fb_x_max,
            cauchy_x_max: None,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedOutcome {
    Spreading,
    Vanishing,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutcomeSection {
    pub span_factor: f64,
    pub core_eps: f64,
    pub vanish_eps: f64,
    pub stall_eps: f64,
    /// Checked by the `dichotomy` experiment when present.
    pub expect: Option<ExpectedOutcome>,
}

impl Default for OutcomeSection {
    fn default() -> Self {
        let t = OutcomeThresholds::default();
        Self {
            span_factor: t.span_factor,
            core_eps: t.core_eps,
            vanish_eps: t.vanish_eps,
            stall_eps: t.stall_eps,
            expect: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub output: Option<PathBuf>,
    /// Recorded in summaries; no computation here draws random numbers.
    pub seed: u64,
    pub kernel: KernelSpec,
    pub reaction: ReactionSpec,
    pub initial: InitialSpec,
    pub model: ModelSection,
    pub simulation: SimulationSection,
    pub semiwave: SemiWaveSection,
    pub speed: SpeedSection,
    pub truncation: TruncationSection,
    pub cauchy: CauchySection,
    pub mu_limit: MuLimitSection,
    pub outcome: OutcomeSection,
}

pub const EXPERIMENTS: [&str; 5] = ["linear-speed", "accelerated", "dichotomy", "mu-limit", "truncation"];

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(vec![e.message().to_string()]))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text)
}

fn positive(problems: &mut Vec<String>, key: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        problems.push(format!("{key} must be positive, got {v}"));
    }
}

fn positive_opt(problems: &mut Vec<String>, key: &str, v: Option<f64>) {
    if let Some(v) = v {
        positive(problems, key, v);
    }
}

fn increasing(problems: &mut Vec<String>, key: &str, v: &[f64]) {
    if v.is_empty() {
        problems.push(format!("{key} must not be empty"));
    }
    if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        problems.push(format!("{key} entries must be positive"));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        problems.push(format!("{key} must be strictly increasing"));
    }
}

impl RunConfig {
    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut p = Vec::new();
        if let Some(name) = &self.experiment {
            if !EXPERIMENTS.contains(&name.as_str()) {
                p.push(format!("experiment must be one of {}, got {name:?}", EXPERIMENTS.join(", ")));
            }
        }
        if let Err(e) = self.kernel.build() {
            p.push(format!("kernel: {e}"));
        }
        match self.reaction.build() {
            Err(e) => p.push(format!("reaction: {e}")),
            Ok(r) => match validate_kpp(&r, 1000) {
                Ok(report) => {
                    for c in report.clauses.iter().filter(|c| !c.passed) {
                        p.push(format!("reaction violates {} (worst {:e})", c.clause, c.worst_violation));
                    }
                }
                Err(e) => p.push(format!("reaction: {e}")),
            },
        }
        let InitialSpec::Parabola { amplitude } = self.initial;
        positive(&mut p, "initial.amplitude", amplitude);

        let m = &self.model;
        positive(&mut p, "model.d", m.d);
        positive(&mut p, "model.mu", m.mu);
        positive(&mut p, "model.h0", m.h0);

        let s = &self.simulation;
        positive(&mut p, "simulation.t_end", s.t_end);
        positive(&mut p, "simulation.dx", s.dx);
        positive(&mut p, "simulation.sample_dt", s.sample_dt);
        positive_opt(&mut p, "simulation.snap_dt", s.snap_dt);
        positive_opt(&mut p, "simulation.x_max", s.x_max);
        positive_opt(&mut p, "simulation.dt", s.dt);
        positive_opt(&mut p, "simulation.v_cap", s.v_cap);
        if !(s.window_fraction > 0.0 && s.window_fraction <= 1.0) {
            p.push(format!("simulation.window_fraction must lie in (0, 1], got {}", s.window_fraction));
        }
        if s.dx >= m.h0 {
            p.push(format!("simulation.dx = {} must be smaller than model.h0 = {}", s.dx, m.h0));
        }

        let w = &self.semiwave;
        positive_opt(&mut p, "semiwave.length", w.length);
        if w.n_cells < 100 {
            p.push(format!("semiwave.n_cells must be at least 100, got {}", w.n_cells));
        }
        if !(w.sigma_homotopy >= 0.0 && w.sigma_homotopy < 1.0) {
            p.push(format!("semiwave.sigma_homotopy must lie in [0, 1), got {}", w.sigma_homotopy));
        }
        positive(&mut p, "semiwave.tol_iter", w.tol_iter);
        if w.max_iters == 0 {
            p.push("semiwave.max_iters must be positive".into());
        }
        if !(w.plateau_eps > 0.0 && w.plateau_eps < 0.1) {
            p.push(format!("semiwave.plateau_eps must lie in (0, 0.1), got {}", w.plateau_eps));
        }
        positive(&mut p, "semiwave.c", w.c);

        positive(&mut p, "speed.tol", self.speed.tol);
        positive(&mut p, "speed.tol_cstar", self.speed.tol_cstar);
        increasing(&mut p, "speed.mus", &self.speed.mus);

        increasing(&mut p, "truncation.radii", &self.truncation.radii);
        positive(&mut p, "truncation.ramp", self.truncation.ramp);

        let c = &self.cauchy;
        positive(&mut p, "cauchy.t_end", c.t_end);
        positive(&mut p, "cauchy.dx", c.dx);
        positive(&mut p, "cauchy.sample_dt", c.sample_dt);
        positive_opt(&mut p, "cauchy.snap_dt", c.snap_dt);
        positive_opt(&mut p, "cauchy.x_max", c.x_max);
        positive_opt(&mut p, "cauchy.dt", c.dt);
        positive(&mut p, "cauchy.boundary_eps", c.boundary_eps);
        if !(c.level > 0.0 && c.level < 1.0) {
            p.push(format!("cauchy.level must lie in (0, 1), got {}", c.level));
        }

        let l = &self.mu_limit;
        increasing(&mut p, "mu_limit.mus", &l.mus);
        positive(&mut p, "mu_limit.t_end", l.t_end);
        positive(&mut p, "mu_limit.dx", l.dx);
        positive(&mut p, "mu_limit.sample_dt", l.sample_dt);
        positive(&mut p, "mu_limit.window", l.window);
        positive(&mut p, "mu_limit.fb_x_max", l.fb_x_max);
        positive_opt(&mut p, "mu_limit.cauchy_x_max", l.cauchy_x_max);
        positive_opt(&mut p, "mu_limit.dt", l.dt);

        let o = &self.outcome;
        positive(&mut p, "outcome.span_factor", o.span_factor);
        positive(&mut p, "outcome.core_eps", o.core_eps);
        positive(&mut p, "outcome.vanish_eps", o.vanish_eps);
        positive(&mut p, "outcome.stall_eps", o.stall_eps);

        if p.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(p))
        }
    }

    pub fn kernel(&self) -> Result<Kernel, CliError> {
        Ok(self.kernel.build()?)
    }

    pub fn reaction(&self) -> Result<Reaction, CliError> {
        Ok(self.reaction.build()?)
    }

    pub fn semiwave_params(&self, k: &Kernel) -> SemiWaveParams {
        let w = &self.semiwave;
        SemiWaveParams {
            length: w.length.unwrap_or_else(|| SemiWaveParams::for_kernel(k).length),
            n_cells: w.n_cells,
            sigma_homotopy: w.sigma_homotopy,
            tol_iter: w.tol_iter,
            max_iters: w.max_iters,
            plateau_eps: w.plateau_eps,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            d: self.model.d,
            mu: self.model.mu,
            h0: self.model.h0,
            t_end: s.t_end,
            dx: s.dx,
            sample_dt: s.sample_dt,
            snap_dt: s.snap_dt,
            x_max: s.x_max,
            dt: s.dt,
            v_cap: s.v_cap,
            initial: self.initial.parabola(),
        }
    }

    pub fn cauchy_config(&self) -> CauchyConfig {
        let c = &self.cauchy;
        CauchyConfig {
            d: self.model.d,
            h0: self.model.h0,
            initial: self.initial.parabola(),
            t_end: c.t_end,
            dx: c.dx,
            sample_dt: c.sample_dt,
            snap_dt: c.snap_dt,
            x_max: c.x_max,
            dt: c.dt,
            level: c.level,
            boundary_eps: c.boundary_eps,
        }
    }

    pub fn mu_limit_config(&self) -> MuLimitConfig {
        let l = &self.mu_limit;
        MuLimitConfig {
            d: self.model.d,
            h0: self.model.h0,
            initial: self.initial.parabola(),
            t_end: l.t_end,
            dx: l.dx,
            sample_dt: l.sample_dt,
            window: l.window,
            fb_x_max: l.fb_x_max,
            cauchy_x_max: l.cauchy_x_max,
            dt: l.dt,
        }
    }

    pub fn thresholds(&self) -> OutcomeThresholds {
        let o = &self.outcome;
        OutcomeThresholds {
            span_factor: o.span_factor,
            core_eps: o.core_eps,
            vanish_eps: o.vanish_eps,
            stall_eps: o.stall_eps,
        }
    }
}
