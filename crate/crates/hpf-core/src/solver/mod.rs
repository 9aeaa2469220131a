//! Newton-Raphson solution of the coupled harmonic power-flow problem.
//!
//! Unknowns are the port spectra that the grid cannot determine on its own:
//! terminal voltages at following ports and injected currents at forming
//! ports, stored for positive orders only (negative orders follow from
//! Hermitian symmetry, the DC order carries no source). The residual pairs
//! the exact affine grid relation with the resource responses; the Jacobian
//! combines the closed-form grid blocks with central finite differences of
//! the (nonlinear) resource responses.

mod init;
mod newton;
mod problem;

pub use init::{flat_init, random_init};
pub use newton::solve;
pub use problem::{
    build_problem, decode_port_spectrum, encode_port_spectrum, HpfProblem, HpfSolution,
    PortBinding, PortSolution,
};

/// Encode a spectrum into the solver's real unknown layout.
pub fn encode_port_slice(
    sp: crate::spectral::SpectralParams,
    ps: &crate::spectral::PolyphaseSpectrum,
    out: &mut [f64],
) {
    encode_port_spectrum(sp, ps, out)
}

use thiserror::Error;

/// Strategy for the initial point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitStrategy {
    /// Nominal balanced fundamental voltage at following ports, zero
    /// current at forming ports.
    Flat,
    /// Random sequence components at every port and order, magnitudes and
    /// phases uniform in the given ranges.
    Random {
        seed: u64,
        mag_range: (f64, f64),
        phase_range: (f64, f64),
    },
}

impl InitStrategy {
    pub fn random(seed: u64) -> Self {
        InitStrategy::Random {
            seed,
            mag_range: (0.0, 10.0),
            phase_range: (0.0, std::f64::consts::TAU),
        }
    }
}

/// Solver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Convergence threshold on the residual infinity norm, per-unit.
    pub tol: f64,
    pub max_iter: usize,
    /// Central finite-difference step for the resource Jacobian blocks.
    pub fd_step: f64,
    pub init: InitStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            fd_step: 1e-6,
            init: InitStrategy::Flat,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0 && self.fd_step > 0.0 && self.max_iter >= 1) {
            return Err(SolverError::InvalidConfig(
                "tol and fd_step must be positive, max_iter at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Errors raised by the solver.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("resource evaluation failed at node {node}: {source}")]
    Resource {
        node: String,
        #[source]
        source: crate::resources::ResourceError,
    },
    #[error("Jacobian is singular at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error(
        "did not converge within {iterations} iterations (residual {residual:.3e}, history {history:?})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("iterate diverged at iteration {iteration} (norm {norm:.3e})")]
    Diverged { iteration: usize, norm: f64 },
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
}
