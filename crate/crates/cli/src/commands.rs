//! Subcommands and named experiments. Each writes its artifacts into the
//! output directory and returns the process exit code.

use frontlab_core::cauchy::{cauchy_simulate, compare_mu_limit, CauchyReport};
use frontlab_core::fbsim::{
    classify_outcome, measure_speed, principal_eigenvalue, simulate, truncated_speed_sequence, FrontTrajectory,
    Outcome, OutcomeTag, SimReport, SpeedMeasurement,
};
use frontlab_core::kernel::{classify_density, Kernel, TailClass};
use frontlab_core::numerics::fit_slope;
use frontlab_core::reaction::Reaction;
use frontlab_core::semiwave::{linear_speed, solve_semiwave, SemiWaveOutcome};
use frontlab_core::speed::{c0_curve, solve_c0};
use serde::Serialize;

use crate::config::{ExpectedOutcome, RunConfig};
use crate::error::{CliError, EXIT_CHECK_FAILED, EXIT_NONCONVERGENCE, EXIT_PASS};
use crate::output::OutDir;

/// Cells used for the principal eigenvalue reported by `dichotomy`.
const EIGEN_CELLS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
struct KernelInfo {
    name: String,
    tail_class: String,
    c_j: Option<f64>,
}

fn kernel_info(k: &Kernel) -> KernelInfo {
    KernelInfo { name: k.name().to_string(), tail_class: k.tail_class().to_string(), c_j: k.c_j().ok() }
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    kernel: KernelInfo,
    reaction: String,
    #[serde(flatten)]
    body: T,
}

fn write_summary<T: Serialize>(out: &OutDir, command: &str, cfg: &RunConfig, k: &Kernel, r: &Reaction, body: T) -> Result<(), CliError> {
    out.write_summary(&Summary { command, seed: cfg.seed, kernel: kernel_info(k), reaction: r.name.clone(), body })?;
    Ok(())
}

fn verdict(checks: &[Check]) -> i32 {
    if checks.iter().all(|c| c.passed) {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[derive(Serialize)]
struct SemiWaveBody {
    c: f64,
    sigma: f64,
    accepted: bool,
    outcome: SemiWaveOutcomeSummary,
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
enum SemiWaveOutcomeSummary {
    Accepted { residual: f64, fixed_point_defect: f64, plateau: f64, iterations: usize, length: f64, n_cells: usize },
    Rejected { plateau: f64, plateau_target: f64, iterations: usize, reason: String },
}

/// Semi-wave profile at one speed. A speed at or above the existence
/// threshold has no semi-wave; that is reported and exits with 1.
pub fn semiwave(cfg: &RunConfig, c: Option<f64>, sigma: Option<f64>, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let mut params = cfg.semiwave_params(&k);
    if let Some(s) = sigma {
        params.sigma_homotopy = s;
    }
    let c = c.unwrap_or(cfg.semiwave.c);
    let outcome = solve_semiwave(c, cfg.model.d, &k, &r, &params)?;
    let (accepted, summary) = match &outcome {
        SemiWaveOutcome::Accepted(p) => {
            out.write_csv("profile.csv", &["x", "phi"], p.grid.nodes().zip(&p.phi).map(|(x, &v)| [x, v]))?;
            (
                true,
                SemiWaveOutcomeSummary::Accepted {
                    residual: p.residual,
                    fixed_point_defect: p.fixed_point_defect,
                    plateau: p.plateau_value,
                    iterations: p.iterations_used,
                    length: params.length,
                    n_cells: params.n_cells,
                },
            )
        }
        SemiWaveOutcome::NonExistence(n) => (
            false,
            SemiWaveOutcomeSummary::Rejected {
                plateau: n.plateau_value,
                plateau_target: n.plateau_target,
                iterations: n.iterations,
                reason: n.reason.clone(),
            },
        ),
    };
    write_summary(out, "semiwave", cfg, &k, &r, SemiWaveBody { c, sigma: params.sigma_homotopy, accepted, outcome: summary })?;
    Ok(if accepted { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct SpeedBody {
    mu: f64,
    c0: f64,
    residual: f64,
    bracket: (f64, f64),
    evaluations: usize,
    upper_bound: Option<f64>,
}

pub fn speed(cfg: &RunConfig, mu: Option<f64>, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let mu = mu.unwrap_or(cfg.model.mu);
    let params = cfg.semiwave_params(&k);
    let s = solve_c0(mu, cfg.model.d, &k, &r, &params, cfg.speed.tol)?;
    let p = &s.profile;
    out.write_csv("profile.csv", &["x", "phi"], p.grid.nodes().zip(&p.phi).map(|(x, &v)| [x, v]))?;
    let body = SpeedBody {
        mu,
        c0: s.c0,
        residual: s.residual,
        bracket: s.bracket,
        evaluations: s.evaluations,
        upper_bound: k.c_j().ok().map(|c| mu * c),
    };
    write_summary(out, "speed", cfg, &k, &r, body)?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct CurvePoint {
    mu: f64,
    c0: Option<f64>,
    residual: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct CurveBody {
    points: Vec<CurvePoint>,
}

/// `c0(μ)` over a list of coefficients. Points that fail to solve are left
/// out of the CSV, listed in the summary, and make the exit code 3.
pub fn speed_curve(cfg: &RunConfig, mus: Option<&[f64]>, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let mus = mus.unwrap_or(&cfg.speed.mus);
    let params = cfg.semiwave_params(&k);
    let curve = c0_curve(mus, cfg.model.d, &k, &r, &params, cfg.speed.tol)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (&mu, s) in mus.iter().zip(&curve) {
        match s {
            Ok(s) => {
                rows.push([mu, s.c0, s.residual]);
                points.push(CurvePoint { mu, c0: Some(s.c0), residual: Some(s.residual), error: None });
            }
            Err(e) => points.push(CurvePoint { mu, c0: None, residual: None, error: Some(e.to_string()) }),
        }
    }
    out.write_csv("c0_curve.csv", &["mu", "c0", "residual"], &rows)?;
    let failed = points.iter().any(|p| p.error.is_some());
    write_summary(out, "speed-curve", cfg, &k, &r, CurveBody { points })?;
    Ok(if failed { EXIT_NONCONVERGENCE } else { EXIT_PASS })
}

fn write_trajectory(out: &OutDir, traj: &FrontTrajectory) -> Result<(), CliError> {
    out.write_csv("trajectory.csv", &["t", "g", "h"], traj.samples.iter().map(|s| [s.t, s.g, s.h]))?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        out.write_csv(&format!("snapshots/{i:03}.csv"), &["x", "u"], snap.x.iter().zip(&snap.u).map(|(&x, &u)| [x, u]))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimBody<'a> {
    t_end: f64,
    g_end: f64,
    h_end: f64,
    outcome: &'a Outcome,
    speed: Option<&'a SpeedMeasurement>,
    speed_error: Option<String>,
    clamp_count: usize,
    max_u: f64,
    m0_star: f64,
    steps: usize,
    smallest_dt: f64,
    max_asymmetry: f64,
    snapshots: usize,
}

struct SimRun {
    report: SimReport,
    outcome: Outcome,
    speed: Result<SpeedMeasurement, frontlab_core::Error>,
}

fn run_simulation(cfg: &RunConfig, k: &Kernel, r: &Reaction, out: &OutDir) -> Result<SimRun, CliError> {
    let sim = cfg.sim_config();
    let report = simulate(&sim, k, r)?;
    write_trajectory(out, &report.trajectory)?;
    let outcome = classify_outcome(&report.trajectory, &report.final_state, sim.h0, &cfg.thresholds());
    let speed = measure_speed(&report.trajectory, cfg.simulation.window_fraction);
    Ok(SimRun { report, outcome, speed })
}

fn sim_body(run: &SimRun) -> SimBody<'_> {
    let rep = &run.report;
    SimBody {
        t_end: rep.final_state.t,
        g_end: rep.final_state.g,
        h_end: rep.final_state.h,
        outcome: &run.outcome,
        speed: run.speed.as_ref().ok(),
        speed_error: run.speed.as_ref().err().map(|e| e.to_string()),
        clamp_count: rep.clamp_count,
        max_u: rep.max_u,
        m0_star: rep.m0_star,
        steps: rep.steps,
        smallest_dt: rep.smallest_dt,
        max_asymmetry: rep.max_asymmetry,
        snapshots: rep.trajectory.snapshots.len(),
    }
}

pub fn simulate_cmd(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let run = run_simulation(cfg, &k, &r, out)?;
    write_summary(out, "simulate", cfg, &k, &r, sim_body(&run))?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct CauchyBody {
    level: f64,
    t_end: f64,
    samples: usize,
    slope_plus: Option<f64>,
    boundary_max: f64,
    domain_too_small: bool,
    clamp_count: usize,
    max_u: f64,
    steps: usize,
    snapshots: usize,
}

fn write_cauchy(out: &OutDir, rep: &CauchyReport) -> Result<(), CliError> {
    out.write_csv("levelset.csv", &["t", "x_minus", "x_plus"], rep.track.samples.iter().map(|s| [s.t, s.x_minus, s.x_plus]))?;
    for (i, snap) in rep.snapshots.iter().enumerate() {
        out.write_csv(&format!("snapshots/{i:03}.csv"), &["x", "u"], snap.grid.nodes().zip(&snap.u).map(|(x, &u)| [x, u]))?;
    }
    Ok(())
}

/// Whole-line problem. A domain too small for the run exits with 3.
pub fn cauchy_cmd(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let rep = cauchy_simulate(&cfg.cauchy_config(), &k, &r)?;
    write_cauchy(out, &rep)?;
    let ts = rep.track.times();
    let xs = rep.track.plus();
    let half = ts.len() / 2;
    let slope_plus = if ts.len() >= 4 { fit_slope(&ts[half..], &xs[half..]).ok() } else { None };
    let body = CauchyBody {
        level: rep.track.lambda,
        t_end: rep.final_state.t,
        samples: ts.len(),
        slope_plus,
        boundary_max: rep.boundary_max,
        domain_too_small: rep.domain_too_small,
        clamp_count: rep.clamp_count,
        max_u: rep.max_u,
        steps: rep.steps,
        snapshots: rep.snapshots.len(),
    };
    write_summary(out, "cauchy", cfg, &k, &r, body)?;
    Ok(if rep.domain_too_small { EXIT_NONCONVERGENCE } else { EXIT_PASS })
}

#[derive(Serialize)]
struct ClassifyBody {
    stored_class: String,
    probed_class: Option<String>,
    probe_error: Option<String>,
    agree: Option<bool>,
    c_j: Option<f64>,
    linear_speed: Option<f64>,
}

/// Reports the stored tail class next to a numeric probe of the density.
pub fn classify_kernel(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let stored = k.tail_class();
    let density = |x: f64| k.density(x);
    let probed = classify_density(&density);
    let body = ClassifyBody {
        stored_class: stored.to_string(),
        probed_class: probed.as_ref().ok().map(|c| c.to_string()),
        probe_error: probed.as_ref().err().map(|e| e.to_string()),
        agree: probed.as_ref().ok().map(|&c| c == stored),
        c_j: k.c_j().ok(),
        linear_speed: linear_speed(cfg.model.d, &k, &r)?,
    };
    println!("{}: {stored}", k.name());
    write_summary(out, "classify-kernel", cfg, &k, &r, body)?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct ExperimentBody<T: Serialize> {
    experiment: String,
    passed: bool,
    checks: Vec<Check>,
    #[serde(flatten)]
    details: T,
}

fn finish<T: Serialize>(name: &str, cfg: &RunConfig, k: &Kernel, r: &Reaction, out: &OutDir, checks: Vec<Check>, details: T) -> Result<i32, CliError> {
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let code = verdict(&checks);
    let body = ExperimentBody { experiment: name.to_string(), passed: code == EXIT_PASS, checks, details };
    write_summary(out, "experiment", cfg, k, r, body)?;
    Ok(code)
}

pub fn experiment(name: &str, cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    match name {
        "linear-speed" => linear_speed_experiment(cfg, out),
        "accelerated" => accelerated_experiment(cfg, out),
        "dichotomy" => dichotomy_experiment(cfg, out),
        "mu-limit" => mu_limit_experiment(cfg, out),
        "truncation" => truncation_experiment(cfg, out),
        other => Err(CliError::Config(vec![format!(
            "unknown experiment {other:?}; expected one of {}",
            crate::config::EXPERIMENTS.join(", ")
        )])),
    }
}

#[derive(Serialize)]
struct LinearSpeedDetails<'a> {
    c0: f64,
    #[serde(flatten)]
    simulation: SimBody<'a>,
}

/// Front speed of the free-boundary run against the selected speed `c0`.
fn linear_speed_experiment(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let sol = solve_c0(cfg.model.mu, cfg.model.d, &k, &r, &cfg.semiwave_params(&k), cfg.speed.tol)?;
    let run = run_simulation(cfg, &k, &r, out)?;
    let m = run.speed.as_ref().map_err(|e| CliError::Core(e.clone()))?;
    let c0 = sol.c0;
    let mut checks = vec![
        Check::new(
            "right front speed",
            rel_gap(m.slope_h, c0) <= 0.10,
            format!("slope {:.6} vs c0 {c0:.6}, gap {:.2}% (<= 10%)", m.slope_h, 100.0 * rel_gap(m.slope_h, c0)),
        ),
        Check::new(
            "left front speed",
            rel_gap(-m.slope_g, c0) <= 0.10,
            format!("slope {:.6} vs -c0, gap {:.2}% (<= 10%)", m.slope_g, 100.0 * rel_gap(-m.slope_g, c0)),
        ),
        Check::new("no clamping", run.report.clamp_count == 0, format!("{} clamped values", run.report.clamp_count)),
    ];
    if let Ok(cj) = k.c_j() {
        let bound = cfg.model.mu * cj;
        checks.push(Check::new("speed below flux bound", c0 < bound, format!("c0 {c0:.6} < mu c(J) = {bound:.6}")));
    }
    finish("linear-speed", cfg, &k, &r, out, checks, LinearSpeedDetails { c0, simulation: sim_body(&run) })
}

/// Dyadic-window front speeds must keep growing when the kernel has no
/// finite first moment.
fn accelerated_experiment(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let run = run_simulation(cfg, &k, &r, out)?;
    let m = run.speed.as_ref().map_err(|e| CliError::Core(e.clone()))?;
    let s = &m.dyadic_slopes;
    let ratio = s[s.len() - 1] / s[0];
    let checks = vec![
        Check::new(
            "kernel lacks a first moment",
            k.tail_class() == TailClass::FatTail,
            format!("tail class {}", k.tail_class()),
        ),
        Check::new(
            "dyadic slopes increase",
            s.windows(2).all(|w| w[1] > w[0]),
            format!("{:?}", s.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()),
        ),
        Check::new("acceleration ratio", ratio >= 2.0, format!("last/first = {ratio:.3} (>= 2)")),
    ];
    finish("accelerated", cfg, &k, &r, out, checks, sim_body(&run))
}

#[derive(Serialize)]
struct DichotomyDetails<'a> {
    /// Principal eigenvalue on the initial range.
    lambda_initial: f64,
    /// Principal eigenvalue on the final range.
    lambda_final: f64,
    #[serde(flatten)]
    simulation: SimBody<'a>,
}

/// Spreading or vanishing from one initial configuration, cross-checked
/// against the principal eigenvalue criterion.
fn dichotomy_experiment(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let run = run_simulation(cfg, &k, &r, out)?;
    let d = cfg.model.d;
    let a = r.derivative(0.0);
    let lambda_initial = principal_eigenvalue(cfg.model.h0, d, &k, a, EIGEN_CELLS)?;
    let fin = &run.report.final_state;
    let lambda_final = principal_eigenvalue(0.5 * (fin.h - fin.g), d, &k, a, EIGEN_CELLS)?;
    let tag = run.outcome.tag;
    let mut checks = match cfg.outcome.expect {
        Some(expect) => {
            let want = match expect {
                ExpectedOutcome::Spreading => OutcomeTag::Spreading,
                ExpectedOutcome::Vanishing => OutcomeTag::Vanishing,
            };
            vec![Check::new("expected outcome", tag == want, format!("{tag:?}, expected {want:?}"))]
        }
        None => vec![Check::new("decided outcome", tag != OutcomeTag::Undecided, format!("{tag:?}"))],
    };
    checks.push(Check::new(
        "positive eigenvalue forces spreading",
        !(lambda_initial > 0.0 && tag == OutcomeTag::Vanishing),
        format!("lambda on initial range {lambda_initial:.6}"),
    ));
    checks.push(Check::new(
        "vanishing needs a nonpositive eigenvalue",
        !(tag == OutcomeTag::Vanishing && lambda_final > 0.0),
        format!("lambda on final range {lambda_final:.6}"),
    ));
    let details = DichotomyDetails { lambda_initial, lambda_final, simulation: sim_body(&run) };
    finish("dichotomy", cfg, &k, &r, out, checks, details)
}

#[derive(Serialize)]
struct MuLimitDetails {
    dt: f64,
    cauchy_domain_too_small: bool,
    linear_speed: Option<f64>,
}

/// Large-μ behaviour: `c0(μ)` increases toward the whole-line speed and
/// free-boundary solutions approach the whole-line solution.
fn mu_limit_experiment(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let mus = &cfg.mu_limit.mus;
    let d = cfg.model.d;
    let curve = c0_curve(mus, d, &k, &r, &cfg.semiwave_params(&k), cfg.speed.tol)?;
    let c0: Vec<f64> = curve
        .into_iter()
        .map(|s| s.map(|s| s.c0))
        .collect::<Result<_, _>>()?;
    let rep = compare_mu_limit(mus, &cfg.mu_limit_config(), &k, &r)?;
    let rows: Vec<[f64; 6]> = rep
        .entries
        .iter()
        .zip(&c0)
        .map(|(e, &c)| [e.mu, c, e.excess, e.sup_diff, e.h_end, e.g_end])
        .collect();
    out.write_csv("mu_limit.csv", &["mu", "c0", "excess", "sup_diff", "h_end", "g_end"], &rows)?;

    let lin = linear_speed(d, &k, &r)?;
    let excess: Vec<f64> = rep.entries.iter().map(|e| e.excess).collect();
    let diff: Vec<f64> = rep.entries.iter().map(|e| e.sup_diff).collect();
    let h: Vec<f64> = rep.entries.iter().map(|e| e.h_end).collect();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ");
    let mut checks = vec![
        Check::new("c0 increases with mu", c0.windows(2).all(|w| w[1] > w[0]), format!("[{}]", fmt(&c0))),
        Check::new("free boundary stays below whole line", excess.iter().all(|&e| e <= 5e-3), format!("excess [{}] (<= 5e-3)", fmt(&excess))),
        Check::new("gap to whole line shrinks", diff.windows(2).all(|w| w[1] < w[0]), format!("sup diff [{}]", fmt(&diff))),
        Check::new("front increases with mu", h.windows(2).all(|w| w[1] > w[0]), format!("h(T) [{}]", fmt(&h))),
        Check::new(
            "whole-line domain large enough",
            !rep.cauchy_domain_too_small,
            format!("boundary flag {}", if rep.cauchy_domain_too_small { "raised" } else { "clear" }),
        ),
    ];
    if let Some(cs) = lin {
        checks.push(Check::new(
            "c0 below whole-line speed",
            c0.iter().all(|&c| c < cs),
            format!("max c0 {:.6} < {cs:.6}", c0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        ));
    }
    let details = MuLimitDetails { dt: rep.dt, cauchy_domain_too_small: rep.cauchy_domain_too_small, linear_speed: lin };
    finish("mu-limit", cfg, &k, &r, out, checks, details)
}

#[derive(Serialize)]
struct TruncationDetails {
    c0: Option<f64>,
    errors: Vec<(f64, String)>,
}

/// Speeds of the truncated kernels: bounded by `c0` for kernels with a
/// finite first moment, unbounded otherwise.
fn truncation_experiment(cfg: &RunConfig, out: &OutDir) -> Result<i32, CliError> {
    let (k, r) = (cfg.kernel()?, cfg.reaction()?);
    let t = &cfg.truncation;
    let (d, mu) = (cfg.model.d, cfg.model.mu);
    let params = cfg.semiwave_params(&k);
    let seq = truncated_speed_sequence(&k, &t.radii, t.ramp, d, mu, &r, &params, cfg.speed.tol)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (&radius, s) in t.radii.iter().zip(&seq) {
        match s {
            Ok(s) => rows.push([s.radius, s.sigma_n, s.eta_n, s.c_n, s.residual]),
            Err(e) => errors.push((radius, e.to_string())),
        }
    }
    out.write_csv("truncation.csv", &["radius", "sigma_n", "eta_n", "c_n", "residual"], &rows)?;
    if !errors.is_empty() {
        write_summary(out, "experiment", cfg, &k, &r, TruncationDetails { c0: None, errors })?;
        return Ok(EXIT_NONCONVERGENCE);
    }
    let c: Vec<f64> = rows.iter().map(|row| row[3]).collect();
    let list = c.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    let mut checks = vec![Check::new(
        "speeds nondecreasing in radius",
        c.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-3)),
        format!("[{list}]"),
    )];
    let mut c0 = None;
    if k.tail_class().has_finite_first_moment() {
        let full = solve_c0(mu, d, &k, &r, &params, cfg.speed.tol)?.c0;
        let last = c[c.len() - 1];
        checks.push(Check::new(
            "speeds approach c0",
            rel_gap(last, full) <= 0.05,
            format!("largest radius {last:.6} vs c0 {full:.6}, gap {:.3}% (<= 5%)", 100.0 * rel_gap(last, full)),
        ));
        c0 = Some(full);
    } else {
        let ratio = c[c.len() - 1] / c[0];
        checks.push(Check::new("speeds grow without bound", ratio > 2.0, format!("last/first = {ratio:.3} (> 2)")));
    }
    finish("truncation", cfg, &k, &r, out, checks, TruncationDetails { c0, errors })
}
