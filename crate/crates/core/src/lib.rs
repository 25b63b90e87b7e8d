//! Numerical toolkit for the nonlocal Fisher-KPP equation with free
//! boundaries: semi-wave profiles, spreading speeds, front simulation and
//! the whole-line Cauchy problem.

pub mod cauchy;
pub mod error;
pub mod fbsim;
pub mod kernel;
pub mod numerics;
pub mod reaction;
pub mod semiwave;
pub mod speed;

pub use error::{Error, Result};
