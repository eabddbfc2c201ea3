//! Spectral toolkit for kernels with polynomially decaying eigenvalues on the
//! trigonometric basis of `[0, 1]`.

pub mod basis;
mod holder;
mod kernel;
mod primal;
mod theory;

pub use holder::{
    f_lambda_expand, f_lambda_gap, series_sup, series_sup_grid_error, series_value, unit_grid,
    HolderFunction,
};
pub use kernel::SpectralKernel;
pub use primal::FeatureKrr;
pub use theory::*;
