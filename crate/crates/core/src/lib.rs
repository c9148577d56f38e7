//! Bound spectra and driven dynamics of spherical multi-layered quantum dots.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bessel;
pub mod config;
pub mod dipole;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod report;
pub mod spectral;
pub mod splines;
pub mod units;

pub use error::{Error, Result};
