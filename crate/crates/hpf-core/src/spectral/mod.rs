//! Spectral primitives: harmonic index sets, two-sided spectra of real
//! signals, Fourier-coefficient matrices of linear time-periodic operators,
//! their block-Toeplitz lifts, and the Fortescue / DQ transforms.
//!
//! All spectra follow the convention `x(t) = sum_h X_h exp(j h 2 pi f1 t)`
//! over the symmetric order set `{-h_max, ..., +h_max}`. Real signals carry
//! Hermitian coefficient sets, `X_{-h} = conj(X_h)`.

mod banded;
mod dq;
mod fortescue;
mod ltp;
mod params;
mod spectrum;
mod toeplitz;

pub use banded::BlockBandedLu;
pub use dq::{dq_transform_coefficients, dq_transform_at, DqTransform};
pub use fortescue::{fortescue_matrix, fortescue_to_phase, sequence_compose, sequence_decompose};
pub use ltp::LtpMatrix;
pub use params::SpectralParams;
pub use spectrum::{HarmonicSpectrum, PolyphaseSpectrum, Phase};
pub use toeplitz::{harmonic_derivative, toeplitz_lift, ToeplitzOperator};

use thiserror::Error;

/// Errors raised by the spectral primitives.
#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix for order {order} has shape {rows}x{cols}, expected {exp_rows}x{exp_cols}")]
    DimensionMismatch {
        order: i32,
        rows: usize,
        cols: usize,
        exp_rows: usize,
        exp_cols: usize,
    },
    #[error("harmonic order {order} outside the representable band |h| <= {max}")]
    OrderOutOfBand { order: i32, max: i32 },
    #[error("coefficient set violates Hermitian symmetry at order {order} (deviation {deviation:.3e})")]
    NonHermitian { order: i32, deviation: f64 },
    #[error("spectral parameter sets differ: {0}")]
    ParamsMismatch(String),
}
