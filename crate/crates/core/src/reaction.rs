//! KPP nonlinearities.
//!
//! Every reaction is stored as a polynomial `f(u) = Σ c_k u^k` on `u >= 0`,
//! extended linearly by `f'(0)·u` for negative arguments.

use crate::error::{invalid, Error, Result};
use crate::numerics::bisect;

/// Inflation applied to the sampled Lipschitz constant.
pub const LIPSCHITZ_INFLATION: f64 = 1.1;
const DERIVATIVE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Reaction {
    pub name: String,
    coeffs: Vec<f64>,
    /// `f'(0)`.
    pub df0: f64,
    /// `f'` at the positive equilibrium.
    pub df1: f64,
    /// Sampled Lipschitz constant on `[0, cap_k0]`, before inflation.
    pub lipschitz_k: f64,
    pub cap_k0: f64,
    /// Positive zero of `f` the population settles to (1 unless adjusted).
    pub equilibrium: f64,
}

pub fn make_logistic() -> Reaction {
    Reaction {
        name: "logistic".into(),
        coeffs: vec![0.0, 1.0, -1.0],
        df0: 1.0,
        df1: -1.0,
        lipschitz_k: 1.0,
        cap_k0: 1.0,
        equilibrium: 1.0,
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

fn derivative_coeffs(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

/// Largest sampled `|f(u_{i+1}) - f(u_i)| / Δu` on `[0, cap]`.
fn sampled_lipschitz(f: impl Fn(f64) -> f64, cap: f64) -> f64 {
    let h = cap / DERIVATIVE_SAMPLES as f64;
    (0..DERIVATIVE_SAMPLES)
        .map(|i| {
            let u = i as f64 * h;
            ((f(u + h) - f(u)) / h).abs()
        })
        .fold(0.0, f64::max)
}

impl Reaction {
    /// Polynomial reaction from coefficients `[c_0, c_1, ...]` (constant
    /// term first). Needs `c_0 = 0` and a zero at `u = 1`.
    pub fn polynomial(name: impl Into<String>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("polynomial reaction needs at least two finite coefficients"));
        }
        if coeffs[0] != 0.0 {
            return Err(invalid(format!("reaction must vanish at 0, got f(0) = {}", coeffs[0])));
        }
        let f1 = horner(&coeffs, 1.0);
        if f1.abs() > 1e-12 {
            return Err(invalid(format!("reaction must vanish at 1, got f(1) = {f1}")));
        }
        let deriv = derivative_coeffs(&coeffs);
        let cap_k0 = Self::find_cap(&coeffs);
        let lipschitz_k = sampled_lipschitz(|u| horner(&coeffs, u), cap_k0);
        Ok(Reaction {
            name: name.into(),
            df0: coeffs[1],
            df1: horner(&deriv, 1.0),
            coeffs,
            lipschitz_k,
            cap_k0,
            equilibrium: 1.0,
        })
    }

    /// Smallest `K0 >= 1` with `f < 0` on sampled `(K0, 2·K0 + 1]`.
    fn find_cap(coeffs: &[f64]) -> f64 {
        let step = 1e-3;
        let mut last_nonneg = 1.0;
        for i in 1..=20_000 {
            let u = 1.0 + i as f64 * step;
            if horner(coeffs, u) >= 0.0 {
                last_nonneg = u;
            }
        }
        last_nonneg
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, u: f64) -> f64 {
        if u < 0.0 {
            self.df0 * u
        } else {
            horner(&self.coeffs, u)
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        if u < 0.0 {
            self.df0
        } else {
            horner(&derivative_coeffs(&self.coeffs), u)
        }
    }

    /// Lipschitz constant used for step sizes and the monotonicity shift.
    pub fn effective_lipschitz(&self) -> f64 {
        LIPSCHITZ_INFLATION * self.lipschitz_k
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClauseCheck {
    pub clause: &'static str,
    pub passed: bool,
    /// Largest observed violation; 0 when the clause holds.
    pub worst_violation: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub clauses: Vec<ClauseCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

fn clause(name: &'static str, worst_violation: f64) -> ClauseCheck {
    ClauseCheck {
        clause: name,
        passed: worst_violation <= 0.0,
        worst_violation: worst_violation.max(0.0),
    }
}

/// Sample-based check of the KPP conditions on a uniform grid of `(0, 1)`.
pub fn validate_kpp(r: &Reaction, n_samples: usize) -> Result<ValidationReport> {
    if n_samples < 100 {
        return Err(invalid(format!("validate_kpp needs at least 100 samples, got {n_samples}")));
    }
    let h = 1.0 / n_samples as f64;
    let interior: Vec<f64> = (1..n_samples).map(|i| i as f64 * h).collect();

    let endpoints = r.value(0.0).abs().max(r.value(1.0).abs());
    let positivity = interior.iter().map(|&u| -r.value(u)).fold(f64::NEG_INFINITY, f64::max);
    let mut ratio_increase: f64 = 0.0;
    let mut prev = r.df0;
    for &u in interior.iter().chain(std::iter::once(&1.0)) {
        let q = r.value(u) / u;
        ratio_increase = ratio_increase.max(q - prev);
        prev = q;
    }
    let k0 = r.cap_k0;
    let cap = (1..=n_samples)
        .map(|i| k0 + i as f64 * (k0 + 1.0) / n_samples as f64)
        .map(|u| r.value(u))
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(ValidationReport {
        clauses: vec![
            clause("f(0) = f(1) = 0", if endpoints > 1e-12 { endpoints } else { 0.0 }),
            clause("f > 0 on (0, 1)", if positivity >= 0.0 { positivity.max(f64::MIN_POSITIVE) } else { 0.0 }),
            clause("f'(0) > 0", if r.df0 > 0.0 { 0.0 } else { (-r.df0).max(f64::MIN_POSITIVE) }),
            clause("f'(1) < 0", if r.df1 < 0.0 { 0.0 } else { r.df1.max(f64::MIN_POSITIVE) }),
            clause("f(u)/u nonincreasing", if ratio_increase > 1e-12 { ratio_increase } else { 0.0 }),
            clause("f < 0 beyond K0", if cap >= 0.0 { cap.max(f64::MIN_POSITIVE) } else { 0.0 }),
        ],
    })
}

/// `f_n(u) = f(u) − (1 − σ_n) u` with its positive zero `η_n`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AdjustedReaction {
    pub base: Reaction,
    pub sigma_n: f64,
    pub eta_n: f64,
    adjusted: Reaction,
}

impl AdjustedReaction {
    /// `f_n` as an ordinary reaction whose equilibrium is `η_n`.
    pub fn reaction(&self) -> &Reaction {
        &self.adjusted
    }

    pub fn value(&self, u: f64) -> f64 {
        self.adjusted.value(u)
    }
}

pub fn adjust_for_truncation(r: &Reaction, sigma_n: f64) -> Result<AdjustedReaction> {
    if !(sigma_n > 0.0 && sigma_n <= 1.0) {
        return Err(invalid(format!("sigma_n must lie in (0, 1], got {sigma_n}")));
    }
    let shift = 1.0 - sigma_n;
    let slope = r.df0 - shift;
    if slope <= 0.0 {
        return Err(Error::DegenerateAdjustment { sigma_n, slope });
    }
    let mut coeffs = r.coeffs.clone();
    coeffs[1] -= shift;
    let f_n = |u: f64| horner(&coeffs, u);

    let eta_n = if shift == 0.0 {
        r.equilibrium
    } else {
        let hi = r.equilibrium;
        let guess = hi - 2.0 * shift / r.df1.abs().max(f64::MIN_POSITIVE);
        let lo = if guess > 0.0 && f_n(guess) > 0.0 {
            guess
        } else {
            (1..1000)
                .map(|i| hi * (1.0 - i as f64 / 1000.0))
                .find(|&u| f_n(u) > 0.0)
                .ok_or(Error::DegenerateAdjustment { sigma_n, slope })?
        };
        bisect(|u| -f_n(u), lo, hi, 1e-15)?.x
    };

    let deriv = derivative_coeffs(&coeffs);
    let lipschitz_k = sampled_lipschitz(f_n, r.cap_k0);
    let adjusted = Reaction {
        name: format!("{}-{}u", r.name, shift),
        df0: slope,
        df1: horner(&deriv, eta_n),
        coeffs,
        lipschitz_k,
        cap_k0: r.cap_k0,
        equilibrium: eta_n,
    };
    Ok(AdjustedReaction {
        base: r.clone(),
        sigma_n,
        eta_n,
        adjusted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values() {
        let r = make_logistic();
        assert_eq!(r.value(0.5), 0.25);
        assert_eq!(r.value(-0.2), -0.2);
        assert!((r.effective_lipschitz() - 1.1).abs() < 1e-15);
        let poly = Reaction::polynomial("p", vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(poly.cap_k0, 1.0);
        assert!((poly.lipschitz_k - 1.0).abs() < 1e-3);
        assert!(validate_kpp(&r, 10_000).unwrap().all_passed());
    }

    #[test]
    fn extension_is_c1_at_zero() {
        let r = make_logistic();
        let h = 1e-7;
        assert_eq!(r.value(0.0), 0.0);
        assert!(((r.value(h) - r.value(0.0)) / h - r.df0).abs() < 1e-6);
        assert!(((r.value(0.0) - r.value(-h)) / h - r.df0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_slope_detected() {
        let r = Reaction::polynomial("u2", vec![0.0, 0.0, 1.0, -1.0]).unwrap();
        let report = validate_kpp(&r, 1000).unwrap();
        assert!(!report.clause("f'(0) > 0").unwrap().passed);
    }

    #[test]
    fn ratio_monotonicity_detected() {
        // u(1-u)(1+2u) = u + u² - 2u³
        let r = Reaction::polynomial("bump", vec![0.0, 1.0, 1.0, -2.0]).unwrap();
        let report = validate_kpp(&r, 1000).unwrap();
        let c = report.clause("f(u)/u nonincreasing").unwrap();
        assert!(!c.passed && c.worst_violation > 0.0);
        assert!(report.clause("f'(0) > 0").unwrap().passed);
        assert!(report.clause("f < 0 beyond K0").unwrap().passed);
    }

    #[test]
    fn polynomial_must_vanish_at_one() {
        assert!(Reaction::polynomial("bad", vec![0.0, 1.0, -0.5]).is_err());
        assert!(Reaction::polynomial("bad", vec![0.1, 1.0, -1.1]).is_err());
        assert!(validate_kpp(&make_logistic(), 10).is_err());
    }

    #[test]
    fn adjusted_logistic_roots() {
        let r = make_logistic();
        assert_eq!(adjust_for_truncation(&r, 1.0).unwrap().eta_n, 1.0);
        for s in [0.9, 0.99, 0.5] {
            let a = adjust_for_truncation(&r, s).unwrap();
            assert!((a.eta_n - s).abs() < 1e-14, "{s}: {}", a.eta_n);
            assert!(a.value(a.eta_n).abs() < 1e-14);
            assert!((a.value(0.3) - (0.3 * 0.7 - (1.0 - s) * 0.3)).abs() < 1e-15);
            assert_eq!(a.reaction().equilibrium, a.eta_n);
        }
        assert!(matches!(
            adjust_for_truncation(&r, 1e-3),
            Err(Error::DegenerateAdjustment { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn adjusted_below_base(s in 0.05..1.0f64, u in 0.0..1.0f64) {
                let r = make_logistic();
                let a = adjust_for_truncation(&r, s).unwrap();
                prop_assert!(a.value(u) <= r.value(u));
            }

            #[test]
            fn eta_increasing_in_sigma(s in 0.05..0.99f64, ds in 1e-3..0.01f64) {
                let r = Reaction::polynomial("cubic", vec![0.0, 1.0, 0.0, -1.0]).unwrap();
                let a = adjust_for_truncation(&r, s).unwrap();
                let b = adjust_for_truncation(&r, (s + ds).min(1.0)).unwrap();
                prop_assert!(b.eta_n > a.eta_n);
            }
        }
    }
}
