//! Spreading speed `c0(μ)`: the root of `c = μ M(c)`.
//!
//! `M(c) = ∫_{-∞}^0 a(x) φ^c(x) dx` is the outward flux carried by the
//! semi-wave at speed `c`; it decreases in `c`, so `G(c) = c − μ M(c)` has a
//! single sign change.

use std::collections::BTreeMap;

use log::debug;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kernel::Kernel;
use crate::numerics::gauss_legendre;
use crate::reaction::Reaction;
use crate::semiwave::{SemiWaveOutcome, SemiWaveParams, SemiWaveProfile, SemiWaveSolver};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpeedSolution {
    pub c0: f64,
    pub mu: f64,
    /// `|c0 − μ M(c0)|`.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// Number of semi-wave solves spent on the root.
    pub evaluations: usize,
    #[serde(skip)]
    pub profile: SemiWaveProfile,
}

/// `μ ∫_{-∞}^0 a φ` with `φ` piecewise linear on its grid and equal to the
/// plateau beyond `-L`.
pub fn flux_m(p: &SemiWaveProfile, k: &Kernel, mu: f64) -> Result<f64> {
    if !k.tail_class().has_finite_first_moment() {
        return Err(Error::DivergentIntegral(format!(
            "boundary flux diverges for the fat-tailed kernel {}",
            k.name()
        )));
    }
    let h = p.grid.spacing();
    let mut body = 0.0;
    for j in 0..p.grid.n_cells() {
        let (x0, x1) = (p.grid.node(j), p.grid.node(j + 1));
        let (v0, v1) = (p.phi[j], p.phi[j + 1]);
        if v0 == 0.0 && v1 == 0.0 {
            continue;
        }
        body += gauss_legendre(|x| k.tail_mass(x) * (v0 + (v1 - v0) * (x - x0) / h), x0, x1);
    }
    let far = p.plateau_target * k.far_tail_integral(-p.grid.left());
    Ok(mu * (body + far))
}

/// Evaluates `G(c)` with warm starts from the nearest smaller cached speed.
struct FluxBalance<'a> {
    solver: SemiWaveSolver,
    kernel: &'a Kernel,
    mu: f64,
    cache: BTreeMap<u64, SemiWaveProfile>,
    evaluations: usize,
}

impl FluxBalance<'_> {
    fn g(&mut self, c: f64) -> Result<f64> {
        self.evaluations += 1;
        let warm = self
            .cache
            .range(..c.to_bits())
            .next_back()
            .map(|(_, p)| p.phi.clone());
        match self.solver.solve_from(c, warm.as_deref())? {
            SemiWaveOutcome::Accepted(p) => {
                let g = c - flux_m(&p, self.kernel, self.mu)?;
                debug!("G({c}) = {g:e}");
                self.cache.insert(c.to_bits(), p);
                Ok(g)
            }
            SemiWaveOutcome::NonExistence(_) => Ok(c),
        }
    }
}

/// Root of `c − μ M(c)` with `|G(c0)| <= tol`.
pub fn solve_c0(mu: f64, d: f64, k: &Kernel, r: &Reaction, params: &SemiWaveParams, tol: f64) -> Result<SpeedSolution> {
    if !k.tail_class().has_finite_first_moment() {
        return Err(Error::NoFiniteSpeed);
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let cap = mu * r.equilibrium * k.c_j()?;
    let mut balance = FluxBalance {
        solver: SemiWaveSolver::new(d, k, r, params)?,
        kernel: k,
        mu,
        cache: BTreeMap::new(),
        evaluations: 0,
    };

    let mut lo = 0.1f64.min(cap / 10.0);
    let mut g_lo = balance.g(lo)?;
    let mut halvings = 0;
    while g_lo >= 0.0 {
        if g_lo == 0.0 {
            let profile = balance.cache.remove(&lo.to_bits()).expect("accepted profile cached");
            return Ok(SpeedSolution { c0: lo, mu, residual: 0.0, bracket: (lo, lo), evaluations: balance.evaluations, profile });
        }
        lo /= 2.0;
        halvings += 1;
        if halvings > 60 {
            return Err(invalid("could not find a speed with c < μ M(c)"));
        }
        g_lo = balance.g(lo)?;
    }
    let mut hi = (2.0 * lo).min(cap);
    let mut g_hi = balance.g(hi)?;
    while g_hi <= 0.0 {
        if hi >= cap {
            return Err(Error::Bracket { lo, hi, g_lo, g_hi });
        }
        lo = hi;
        g_lo = g_hi;
        hi = (2.0 * hi).min(cap);
        g_hi = balance.g(hi)?;
    }
    debug!("bracket [{lo}, {hi}] with G = ({g_lo:e}, {g_hi:e})");

    let (mut a, mut b) = (lo, hi);
    let (mut best_c, mut best_g) = if -g_lo < g_hi { (lo, g_lo) } else { (hi, g_hi) };
    while best_g.abs() > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let g = balance.g(mid)?;
        if g.abs() < best_g.abs() {
            best_c = mid;
            best_g = g;
        }
        if g < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let profile = match balance.cache.remove(&best_c.to_bits()) {
        Some(p) => p,
        None => {
            return Err(Error::NonConvergence {
                what: "speed bisection",
                iterations: balance.evaluations,
                last_change: best_g.abs(),
            })
        }
    };
    Ok(SpeedSolution {
        c0: best_c,
        mu,
        residual: best_g.abs(),
        bracket: (a, b),
        evaluations: balance.evaluations,
        profile,
    })
}

/// `solve_c0` over increasing `mus`, in parallel; failures stay per entry.
pub fn c0_curve(
    mus: &[f64],
    d: f64,
    k: &Kernel,
    r: &Reaction,
    params: &SemiWaveParams,
    tol: f64,
) -> Result<Vec<Result<SpeedSolution>>> {
    if mus.iter().any(|&m| !(m > 0.0)) {
        return Err(invalid("all mu values must be positive"));
    }
    if mus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("mu values must be strictly increasing"));
    }
    Ok(mus.par_iter().map(|&mu| solve_c0(mu, d, k, r, params, tol)).collect())
}

/// `M(c)` at a single speed (without the factor `μ`); `None` when no
/// semi-wave exists.
pub fn flux_at(c: f64, d: f64, k: &Kernel, r: &Reaction, params: &SemiWaveParams) -> Result<Option<f64>> {
    match SemiWaveSolver::new(d, k, r, params)?.solve(c)? {
        SemiWaveOutcome::Accepted(p) => Ok(Some(flux_m(&p, k, 1.0)?)),
        SemiWaveOutcome::NonExistence(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_laplace, make_power};
    use crate::numerics::UniformGrid;
    use crate::reaction::make_logistic;

    fn synthetic(value: f64) -> SemiWaveProfile {
        let grid = UniformGrid::new(-40.0, 0.0, 400).unwrap();
        SemiWaveProfile {
            phi: vec![value; grid.len()],
            grid,
            c: 1.0,
            d: 1.0,
            sigma: 0.0,
            plateau_target: value,
            plateau_value: value,
            iterations_used: 0,
            residual: 0.0,
            fixed_point_defect: 0.0,
            max_upward_step: 0.0,
            boundary_reaction: 0.0,
        }
    }

    #[test]
    fn flux_of_constant_profiles() {
        let k = make_laplace();
        assert_eq!(flux_m(&synthetic(0.0), &k, 1.0).unwrap(), 0.0);
        assert!((flux_m(&synthetic(1.0), &k, 3.0).unwrap() - 1.5).abs() < 1e-12);
        let p2 = make_power(2.0).unwrap();
        assert!((flux_m(&synthetic(1.0), &p2, 1.0).unwrap() - p2.c_j().unwrap()).abs() < 1e-12);
        assert!(matches!(
            flux_m(&synthetic(1.0), &make_power(0.8).unwrap(), 1.0),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn fat_tail_has_no_speed() {
        let k = make_power(0.8).unwrap();
        let p = SemiWaveParams::for_kernel(&k);
        assert_eq!(solve_c0(1.0, 1.0, &k, &make_logistic(), &p, 1e-8).unwrap_err(), Error::NoFiniteSpeed);
    }

    #[test]
    fn small_mu_respects_bound() {
        let p = SemiWaveParams { length: 30.0, n_cells: 600, ..SemiWaveParams::default() };
        let s = solve_c0(1e-3, 1.0, &make_laplace(), &make_logistic(), &p, 1e-10).unwrap();
        assert!(s.c0 > 0.0 && s.c0 < 5e-4);
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn curve_rejects_unsorted_input() {
        let p = SemiWaveParams::default();
        assert!(c0_curve(&[1.0, 1.0], 1.0, &make_laplace(), &make_logistic(), &p, 1e-8).is_err());
        assert!(c0_curve(&[-1.0], 1.0, &make_laplace(), &make_logistic(), &p, 1e-8).is_err());
    }
}
