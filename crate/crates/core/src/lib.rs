//! Derivative estimation by plug-in kernel ridge regression.
//!
//! The numerical core is generic over the scalar type ([`Scalar`] is
//! implemented for `f32` and `f64`); the aliases below fix the common choices.
//! The simulation harness works in `f64` only.

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod kernels;
pub mod linalg;
pub mod scalar;
pub mod simharness;
pub mod spectral;
pub mod special;
pub mod stats;
pub mod tuning;

pub use error::{Error, Result};
pub use estimator::{representer_check, FittedKrr, ModelDocument};
pub use kernels::{KernelSpec, MultiIndex};
pub use scalar::Scalar;
pub use tuning::TuneResult;

pub type FittedKrr64 = FittedKrr<f64>;
pub type FittedKrr32 = FittedKrr<f32>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type KernelSpec32 = KernelSpec<f32>;
pub type ModelDocument64 = ModelDocument<f64>;
pub type TuneResult64 = TuneResult<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type SpectralKernel64 = spectral::SpectralKernel<f64>;
