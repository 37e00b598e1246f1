//! Pseudospectral solvers for a hierarchy of pulse-propagation models in a
//! dispersive Klein-Gordon medium: the exact two-component system, the
//! envelope equation, the full-dispersion model, the cubic Schrödinger
//! equation and its Padé-improved variant, together with the dispersion
//! toolkit and an error-sweep harness comparing them on short and chirped
//! pulses.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod experiments;
pub mod models;
pub mod pulses;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
