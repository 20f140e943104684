//! Finite-N GUE gap probabilities, characteristic-polynomial moments and
//! their soft-edge limits, computed three ways: Hankel determinants,
//! sigma-form ODEs and discrete Painleve / Toda recurrences.

pub mod error;
pub mod mp;
pub mod types;

pub mod ode;
pub mod painleve_sym;
pub mod hankel_tau;
pub mod special_fn;
pub mod oracle_mc;
pub mod sigma_solver;
pub mod discrete_painleve;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use types::{GridFunction, GridSpec, LogDetResult, PrecisionConfig};
