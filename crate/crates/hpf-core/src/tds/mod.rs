//! Independent time-domain reference: fixed-step integration of the full
//! averaged network/resource model to steady state, DFT spectrum
//! extraction over a trailing window of fundamental periods, and the
//! magnitude/phase error metrics used to compare against the
//! harmonic-domain solution.

mod dft;
mod engine;
mod kpi;

pub use dft::{dft_extract, dft_extract_polyphase, synthesize_samples};
pub use engine::{simulate, PortWaveforms, TdsConfig, TdsResult};
pub use kpi::{compute_kpis, KpiEntry, KpiReport};

use thiserror::Error;

/// Errors raised by the time-domain simulator.
#[derive(Debug, Error)]
pub enum TdsError {
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error("state norm diverged at t = {t:.6} s (|x| = {norm:.3e})")]
    Unstable { t: f64, norm: f64 },
    #[error("window is not an integer number of samples: {0}")]
    NonIntegerWindow(String),
    #[error("spectral parameter sets differ: {0}")]
    ParamsMismatch(String),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Resource(#[from] crate::resources::ResourceError),
}
