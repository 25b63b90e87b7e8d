//! Dispersal kernels with analytic tail machinery.
//!
//! A kernel `J` is an even probability density. Most of the model only sees
//! it through the tail mass `a(x) = ∫_{-∞}^x J`, which every built-in kernel
//! provides in closed form (or through a tabulated antiderivative for
//! truncated kernels).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use statrs::function::{beta::beta_reg, erf::erfc, gamma::ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::numerics::{gauss_legendre, gauss_legendre_split};

/// Tail behaviour of a kernel, ordered from lightest to heaviest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum TailClass {
    CompactSupport,
    /// Finite exponential moment for some positive rate.
    ThinTail,
    /// `∫ |x| J(x) dx` finite but no exponential moment.
    HeavyTailJ1Only,
    /// `∫ |x| J(x) dx` infinite.
    FatTail,
}

impl TailClass {
    pub fn has_finite_first_moment(self) -> bool {
        !matches!(self, TailClass::FatTail)
    }

    pub fn has_exponential_moment(self) -> bool {
        matches!(self, TailClass::CompactSupport | TailClass::ThinTail)
    }
}

impl fmt::Display for TailClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TailClass::CompactSupport => "compact-support",
            TailClass::ThinTail => "thin-tail",
            TailClass::HeavyTailJ1Only => "heavy-tail-j1-only",
            TailClass::FatTail => "fat-tail",
        };
        f.write_str(s)
    }
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Laplace,
    Gaussian { sd: f64 },
    Uniform { radius: f64 },
    Power { sigma: f64, norm: f64 },
    Tabulated { table: Arc<TruncationTable>, scale: f64 },
}

/// An even dispersal kernel with closed-form (or tabulated) tail mass.
#[derive(Clone)]
pub struct Kernel {
    shape: Shape,
    class: TailClass,
    name: String,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("class", &self.class)
            .finish()
    }
}

/// `J(x) = e^{-|x|}/2`.
pub fn make_laplace() -> Kernel {
    Kernel {
        shape: Shape::Laplace,
        class: TailClass::ThinTail,
        name: "laplace".into(),
    }
}

/// Centered normal density with standard deviation `sd`.
pub fn make_gaussian(sd: f64) -> Result<Kernel> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(invalid(format!("gaussian kernel needs sd > 0, got {sd}")));
    }
    Ok(Kernel {
        shape: Shape::Gaussian { sd },
        class: TailClass::ThinTail,
        name: format!("gaussian({sd})"),
    })
}

/// Uniform density on `[-radius, radius]`.
pub fn make_uniform(radius: f64) -> Result<Kernel> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("uniform kernel needs radius > 0, got {radius}")));
    }
    Ok(Kernel {
        shape: Shape::Uniform { radius },
        class: TailClass::CompactSupport,
        name: format!("uniform({radius})"),
    })
}

/// Normalized `C (1 + x²)^{-σ}`. Requires `σ > 1/2`; the first moment is
/// finite exactly when `σ > 1`.
pub fn make_power(sigma_exp: f64) -> Result<Kernel> {
    if !(sigma_exp > 0.5) || !sigma_exp.is_finite() {
        return Err(Error::NonNormalizable { sigma: sigma_exp });
    }
    let norm = (ln_gamma(sigma_exp) - ln_gamma(sigma_exp - 0.5)).exp() / PI.sqrt();
    let class = if sigma_exp > 1.0 {
        TailClass::HeavyTailJ1Only
    } else {
        TailClass::FatTail
    };
    Ok(Kernel {
        shape: Shape::Power { sigma: sigma_exp, norm },
        class,
        name: format!("power({sigma_exp})"),
    })
}

impl Kernel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tail_class(&self) -> TailClass {
        self.class
    }

    pub fn density(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.shape {
            Shape::Laplace => 0.5 * (-x).exp(),
            Shape::Gaussian { sd } => {
                (-(x * x) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt())
            }
            Shape::Uniform { radius } => {
                if x <= *radius {
                    0.5 / radius
                } else {
                    0.0
                }
            }
            Shape::Power { sigma, norm } => norm * (1.0 + x * x).powf(-sigma),
            Shape::Tabulated { table, scale } => scale * table.density(x),
        }
    }

    /// Tail mass `a(x) = ∫_{-∞}^x J(y) dy`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        if x > 0.0 {
            return self.total_mass() - self.tail_mass(-x);
        }
        match &self.shape {
            Shape::Laplace => 0.5 * x.exp(),
            Shape::Gaussian { sd } => 0.5 * erfc(-x / (sd * std::f64::consts::SQRT_2)),
            Shape::Uniform { radius } => ((x + radius) / (2.0 * radius)).max(0.0),
            Shape::Power { sigma, .. } => 0.5 * beta_reg(sigma - 0.5, 0.5, 1.0 / (1.0 + x * x)),
            Shape::Tabulated { table, scale } => scale * table.cumulative_mass(x),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated { table, scale } => 2.0 * scale * table.half_mass(),
            _ => 1.0,
        }
    }

    pub fn support_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Uniform { radius } => Some(*radius),
            Shape::Tabulated { table, .. } => Some(table.support),
            _ => None,
        }
    }

    /// Points `p >= 0` where `J` is not smooth on `[0, ∞)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Laplace => vec![0.0],
            Shape::Uniform { radius } => vec![0.0, *radius],
            Shape::Tabulated { table, .. } => table.breakpoints.clone(),
            _ => vec![0.0],
        }
    }

    /// `∫ J(x) e^{λx} dx`, `f64::INFINITY` where it diverges.
    pub fn exp_moment(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(invalid(format!("exp_moment needs lambda >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(self.total_mass());
        }
        Ok(match &self.shape {
            Shape::Laplace => {
                if lambda < 1.0 {
                    1.0 / (1.0 - lambda * lambda)
                } else {
                    f64::INFINITY
                }
            }
            Shape::Gaussian { sd } => (0.5 * lambda * lambda * sd * sd).exp(),
            Shape::Uniform { radius } => {
                let z = lambda * radius;
                z.sinh() / z
            }
            Shape::Power { .. } => f64::INFINITY,
            Shape::Tabulated { table, scale } => {
                let s = table.support;
                scale
                    * gauss_legendre_split(
                        |x| table.density(x.abs()) * (lambda * x).exp(),
                        -s,
                        s,
                        &mirrored(&table.breakpoints),
                        0.25,
                    )
            }
        })
    }

    /// Supremum of the rates with a finite exponential moment.
    pub fn exp_moment_abscissa(&self) -> f64 {
        match &self.shape {
            Shape::Laplace => 1.0,
            Shape::Power { .. } => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// `∫_0^w s J(s) ds`.
    pub fn first_moment(&self, w: f64) -> f64 {
        let w = w.max(0.0);
        match &self.shape {
            Shape::Laplace => 0.5 * (1.0 - (-w).exp() * (1.0 + w)),
            Shape::Gaussian { sd } => {
                sd / (2.0 * PI).sqrt() * -(-(w * w) / (2.0 * sd * sd)).exp_m1()
            }
            Shape::Uniform { radius } => w.min(*radius).powi(2) / (4.0 * radius),
            Shape::Power { sigma, norm } => {
                if (sigma - 1.0).abs() < 1e-12 {
                    0.5 * norm * (w * w).ln_1p()
                } else {
                    norm / (2.0 * (1.0 - sigma)) * (((1.0 - sigma) * (w * w).ln_1p()).exp_m1())
                }
            }
            Shape::Tabulated { table, scale } => scale * table.moment_within(w),
        }
    }

    /// `∫_{-w}^0 a(s) ds`, finite for every kernel and every finite `w`.
    pub fn tail_integral(&self, w: f64) -> f64 {
        let w = w.max(0.0);
        w * self.tail_mass(-w) + self.first_moment(w)
    }

    /// `∫_{-∞}^{-d} a(s) ds`; infinite for fat tails.
    pub fn far_tail_integral(&self, d: f64) -> f64 {
        let d = d.max(0.0);
        match &self.shape {
            Shape::Laplace => 0.5 * (-d).exp(),
            Shape::Gaussian { sd } => (sd * sd * self.density(d) - d * self.tail_mass(-d)).max(0.0),
            Shape::Uniform { radius } => {
                if d >= *radius {
                    0.0
                } else {
                    (radius - d).powi(2) / (4.0 * radius)
                }
            }
            Shape::Power { sigma, norm } => {
                if *sigma <= 1.0 {
                    f64::INFINITY
                } else {
                    let beyond = norm / (2.0 * (sigma - 1.0)) * (1.0 + d * d).powf(1.0 - sigma);
                    (beyond - d * self.tail_mass(-d)).max(0.0)
                }
            }
            Shape::Tabulated { table, scale } => {
                if d >= table.support {
                    0.0
                } else {
                    let moment_beyond = table.total_moment() - table.moment_within(d);
                    scale * (moment_beyond - d * table.cumulative_mass(-d)).max(0.0)
                }
            }
        }
    }

    /// Closed-form `c(J) = ∫_{-∞}^0 a(x) dx`.
    pub fn c_j(&self) -> Result<f64> {
        if !self.class.has_finite_first_moment() {
            return Err(Error::DivergentIntegral(format!(
                "c(J) is infinite for the fat-tailed kernel {}",
                self.name
            )));
        }
        Ok(self.far_tail_integral(0.0))
    }
}

fn mirrored(points: &[f64]) -> Vec<f64> {
    points.iter().flat_map(|&p| [p, -p]).collect()
}

/// `c(J)` by quadrature of `a` on `[-depth, 0]` plus the analytic remainder.
pub fn c_of_j(k: &Kernel, truncation_depth: f64) -> Result<f64> {
    if !(truncation_depth > 0.0) {
        return Err(invalid("c_of_j: truncation depth must be positive"));
    }
    if !k.tail_class().has_finite_first_moment() {
        return Err(Error::DivergentIntegral(format!(
            "∫ a diverges for the fat-tailed kernel {}",
            k.name()
        )));
    }
    let bps: Vec<f64> = k.breakpoints().iter().map(|p| -p).collect();
    let body = gauss_legendre_split(|x| k.tail_mass(x), -truncation_depth, 0.0, &bps, 0.5);
    Ok(body + k.far_tail_integral(truncation_depth))
}

/// Tail class of a built-in kernel (stored at construction).
pub fn classify_tail(k: &Kernel) -> Result<TailClass> {
    Ok(k.tail_class())
}

/// Depths used by the numeric tail probes.
pub const PROBE_DEPTHS: [f64; 5] = [10.0, 20.0, 40.0, 80.0, 160.0];
const PROBE_RATES: [f64; 5] = [1.0, 0.5, 0.25, 0.125, 0.0625];
const PROBE_RTOL: f64 = 1e-6;

/// A user-supplied even density without a closed-form tail.
///
/// Such kernels can be classified numerically, but must be truncated before
/// they can drive any solver.
#[derive(Clone)]
pub struct UserKernel {
    pub name: String,
    density: DensityFn,
}

impl fmt::Debug for UserKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserKernel").field("name", &self.name).finish()
    }
}

impl UserKernel {
    pub fn new(name: impl Into<String>, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            density: Arc::new(density),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        (self.density)(x.abs())
    }

    /// Numeric tail probe: exponential moments at decreasing rates for thin
    /// tails, growth of `∫_0^D s J(s) ds` over geometric depths for (J1).
    pub fn classify(&self) -> Result<TailClass> {
        classify_density(&*self.density)
    }

    pub fn truncate(&self, r: f64, ramp: f64) -> Result<TruncatedKernel> {
        truncate_density(&self.name, self.density.clone(), Vec::new(), r, ramp)
    }
}

/// Numeric tail classification of an even density given on `[0, ∞)`.
pub fn classify_density(j: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<TailClass> {
    let last_positive = (0..=6400)
        .map(|i| i as f64 * 0.05)
        .filter(|&x| j(x) > 0.0)
        .last()
        .unwrap_or(0.0);
    // a density that only vanishes through floating-point underflow is not compact
    let underflowed = j(last_positive) < 1e-250;
    if last_positive < PROBE_DEPTHS[4] && !underflowed {
        return Ok(TailClass::CompactSupport);
    }

    let panel = 0.5;
    let cumulative = |g: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(PROBE_DEPTHS.len());
        let mut acc = 0.0;
        let mut from = 0.0;
        for &depth in &PROBE_DEPTHS {
            acc += gauss_legendre_split(g, from, depth, &[], panel);
            out.push(acc);
            from = depth;
        }
        out
    };

    for &lambda in &PROBE_RATES {
        let sym = move |x: f64| j(x) * 2.0 * (lambda * x).cosh();
        let parts = cumulative(&sym);
        let (prev, last) = (parts[3], parts[4]);
        // the weighted integrand must already be decaying, or slow polynomial
        // tails pass for small rates
        let decaying = sym(PROBE_DEPTHS[4]) <= sym(PROBE_DEPTHS[3]);
        if decaying && last.is_finite() && (last - prev).abs() <= PROBE_RTOL * last.abs() {
            return Ok(TailClass::ThinTail);
        }
    }

    let moments = cumulative(&|x: f64| x * j(x));
    let last = moments[4];
    if (last - moments[3]).abs() <= PROBE_RTOL * last.abs() {
        return Ok(TailClass::HeavyTailJ1Only);
    }
    let increments: Vec<f64> = moments.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios[ratios.len() - 2..].iter().all(|&r| r >= 0.95) {
        return Ok(TailClass::FatTail);
    }
    Err(Error::Undecidable(format!(
        "partial first moments {moments:?} at depths {PROBE_DEPTHS:?} neither settle nor keep growing (increment ratios {ratios:?})"
    )))
}

/// Tabulated antiderivatives of a compactly supported `J·ξ`.
struct TruncationTable {
    base: DensityFn,
    radius: f64,
    ramp: f64,
    support: f64,
    breakpoints: Vec<f64>,
    /// Panel edges on `[-support, 0]`.
    edges: Vec<f64>,
    /// `∫_{-support}^{edge} J_n`.
    cum_mass: Vec<f64>,
    /// `∫_{-support}^{edge} |s| J_n(s) ds`.
    cum_moment: Vec<f64>,
}

impl TruncationTable {
    fn cutoff(&self, x: f64) -> f64 {
        let x = x.abs();
        if x <= self.radius {
            1.0
        } else if x >= self.support {
            0.0
        } else {
            let t = (x - self.radius) / self.ramp;
            1.0 - t * t * (3.0 - 2.0 * t)
        }
    }

    fn density(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= self.support {
            0.0
        } else {
            (self.base)(x) * self.cutoff(x)
        }
    }

    fn panel_of(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e <= x).saturating_sub(1).min(self.edges.len() - 2)
    }

    /// `∫_{-∞}^x J_n` for `x <= 0`.
    fn cumulative_mass(&self, x: f64) -> f64 {
        if x <= -self.support {
            return 0.0;
        }
        let x = x.min(0.0);
        let k = self.panel_of(x);
        self.cum_mass[k] + gauss_legendre(|s| self.density(s), self.edges[k], x)
    }

    fn half_mass(&self) -> f64 {
        *self.cum_mass.last().unwrap()
    }

    fn total_moment(&self) -> f64 {
        *self.cum_moment.last().unwrap()
    }

    /// `∫_0^w s J_n(s) ds`.
    fn moment_within(&self, w: f64) -> f64 {
        if w >= self.support {
            return self.total_moment();
        }
        let x = -w;
        let k = self.panel_of(x);
        let upto = self.cum_moment[k] + gauss_legendre(|s| s.abs() * self.density(s), self.edges[k], x);
        self.total_moment() - upto
    }
}

/// `J_n = J·ξ_n` with `ξ_n = 1` on `[-R, R]`, zero beyond `R + ramp`, and a
/// monotone C¹ cubic ramp in between.
#[derive(Clone, Debug)]
pub struct TruncatedKernel {
    pub base_name: String,
    pub cutoff_radius: f64,
    pub ramp: f64,
    /// `σ_n = ∫ J_n`.
    pub sigma_n: f64,
    raw: Kernel,
    normalized: Kernel,
}

impl TruncatedKernel {
    /// `J_n` itself, with total mass `σ_n`.
    pub fn raw(&self) -> &Kernel {
        &self.raw
    }

    /// `J_n / σ_n`, an admissible compactly supported kernel.
    pub fn normalized(&self) -> &Kernel {
        &self.normalized
    }

    pub fn density(&self, x: f64) -> f64 {
        self.raw.density(x)
    }
}

/// Truncates a built-in kernel.
pub fn truncate(k: &Kernel, r: f64, ramp: f64) -> Result<TruncatedKernel> {
    let base = k.clone();
    let breaks = k.breakpoints();
    truncate_density(k.name(), Arc::new(move |x| base.density(x)), breaks, r, ramp)
}

fn truncate_density(
    name: &str,
    base: DensityFn,
    base_breaks: Vec<f64>,
    r: f64,
    ramp: f64,
) -> Result<TruncatedKernel> {
    if !(r > 0.0 && r.is_finite()) || !(ramp > 0.0 && ramp.is_finite()) {
        return Err(invalid(format!("truncate needs R > 0 and ramp > 0, got R = {r}, ramp = {ramp}")));
    }
    let support = r + ramp;
    let mut breakpoints: Vec<f64> = base_breaks.into_iter().filter(|&p| p < support).collect();
    breakpoints.extend([0.0, r, support]);
    breakpoints.sort_by(|a, b| a.total_cmp(b));
    breakpoints.dedup();

    let max_panel = 0.25;
    let mut edges = vec![-support];
    let mut cuts: Vec<f64> = breakpoints.iter().map(|p| -p).filter(|&p| p > -support).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    for &cut in &cuts {
        let from = *edges.last().unwrap();
        let pieces = ((cut - from) / max_panel).ceil().max(1.0) as usize;
        let step = (cut - from) / pieces as f64;
        for p in 1..pieces {
            edges.push(from + p as f64 * step);
        }
        edges.push(cut);
    }

    let mut table = TruncationTable {
        base,
        radius: r,
        ramp,
        support,
        breakpoints,
        edges,
        cum_mass: Vec::new(),
        cum_moment: Vec::new(),
    };
    let mut mass = vec![0.0];
    let mut moment = vec![0.0];
    for w in table.edges.windows(2) {
        let m = gauss_legendre(|s| table.density(s), w[0], w[1]);
        let q = gauss_legendre(|s| s.abs() * table.density(s), w[0], w[1]);
        mass.push(mass.last().unwrap() + m);
        moment.push(moment.last().unwrap() + q);
    }
    table.cum_mass = mass;
    table.cum_moment = moment;

    let sigma_n = (2.0 * table.half_mass()).min(1.0);
    if !(sigma_n > 0.0) {
        return Err(invalid(format!("truncation of {name} at R = {r} has no mass")));
    }
    let table = Arc::new(table);
    let raw = Kernel {
        shape: Shape::Tabulated { table: table.clone(), scale: 1.0 },
        class: TailClass::CompactSupport,
        name: format!("{name}|R={r}"),
    };
    let normalized = Kernel {
        shape: Shape::Tabulated { table, scale: 1.0 / sigma_n },
        class: TailClass::CompactSupport,
        name: format!("{name}|R={r}|normalized"),
    };
    Ok(TruncatedKernel {
        base_name: name.to_string(),
        cutoff_radius: r,
        ramp,
        sigma_n,
        raw,
        normalized,
    })
}

/// Product-integration weights for piecewise-linear data on a uniform grid.
///
/// `full[k] = ∫ J(k·dx − t) hat(t) dt` for the unit hat of half-width `dx`,
/// `half[m] = ∫_0^dx J(m·dx + s)(1 − s/dx) ds` for one side of a hat.
#[derive(Debug, Clone)]
pub struct HatWeights {
    pub dx: f64,
    pub full: Vec<f64>,
    pub half: Vec<f64>,
}

pub fn hat_weights(k: &Kernel, dx: f64, n: usize) -> HatWeights {
    let breaks = k.breakpoints();
    let support = k.support_radius().unwrap_or(f64::INFINITY);
    let mut half = vec![0.0; n + 1];
    let mut rise = vec![0.0; n + 2];
    for m in 0..=n {
        let lo = m as f64 * dx;
        if lo >= support {
            break;
        }
        let hi = lo + dx;
        let desc = gauss_legendre_split(|s| k.density(s) * (1.0 - (s - lo) / dx), lo, hi, &breaks, dx);
        let asc = gauss_legendre_split(|s| k.density(s) * ((s - lo) / dx), lo, hi, &breaks, dx);
        half[m] = desc;
        rise[m + 1] = asc;
    }
    let mut full = vec![0.0; n + 1];
    full[0] = 2.0 * half[0];
    for m in 1..=n {
        full[m] = half[m] + rise[m];
    }
    HatWeights { dx, full, half }
}
