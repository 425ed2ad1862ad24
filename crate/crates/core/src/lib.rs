//! Detection of rank-one spikes in Wigner and IID random matrices with non-Gaussian noise.
//!
//! The crate covers the whole pipeline: noise densities and their information functionals,
//! matrix models, exact and Monte-Carlo likelihood ratios, the closed-form limiting error
//! laws, spectral detectors, finite-N checks of the spin-glass expansion behind the limit
//! theorems, and a reproducible parallel experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod lr;
pub mod lss;
pub mod matrix;
pub mod models;
pub mod pca;
pub mod quadrature;
pub mod rng;
pub mod sg_verify;
pub mod theory;

pub use density::{compute_info, InfoFunctionals, NoiseDensity};
pub use error::{Error, Result};
pub use matrix::DataMatrix;
pub use models::{ModelKind, Prior, Spike, SpikedModelConfig};
