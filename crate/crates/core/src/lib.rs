//! Bessel house-moving processes: special functions, Fourier–Bessel kernels,
//! house-moving densities, path samplers and validation suites.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::type_complexity)]

pub mod error;
pub mod housemoving;
pub mod kernels;
pub mod quad;
pub mod sampler;
pub mod specfun;
pub mod validate;

pub use error::{Error, Result};
