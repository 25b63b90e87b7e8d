use crate::kernel::TailClass;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bracket [{lo}, {hi}] does not change sign (g(lo) = {g_lo}, g(hi) = {g_hi})")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("power kernel with exponent {sigma} is not normalizable (need sigma > 1/2)")]
    NonNormalizable { sigma: f64 },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("tail class could not be decided numerically: {0}")]
    Undecidable(String),

    #[error("truncation mass {sigma_n} too small: f_n'(0) = {slope} is not positive")]
    DegenerateAdjustment { sigma_n: f64, slope: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("operation requires a thin-tailed or compactly supported kernel, got {0:?}")]
    UnsupportedTail(TailClass),

    #[error("kernel violates (J1): no finite spreading speed exists")]
    NoFiniteSpeed,

    #[error("profile never crosses the level {level} (plateau {plateau})")]
    NoCrossing { level: f64, plateau: f64 },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("front reached the edge of the computational domain at t = {t}")]
    DomainExhausted { t: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
