//! Polyphase harmonic-domain grid model.
//!
//! Networks are described by pi-section lines (from sequence parameters),
//! a stiff source behind a short-circuit impedance with a harmonic voltage
//! table, unbalanced wye-connected constant-impedance loads, and resource
//! attachment points. Per harmonic order, the module assembles the nodal
//! admittance matrix, eliminates every non-port node exactly, and exposes
//! the resulting hybrid port relation to the solver: injected currents at
//! voltage-driven ports and terminal voltages at current-driven ports as
//! affine functions of the complementary port variables.

mod benchmark;
mod elements;
mod hybrid;
mod spec;

pub use benchmark::{benchmark_network, benchmark_network_with_followers, validation_network};
pub use elements::{line_pi_section, load_admittance, thevenin_source_spectrum};
pub use hybrid::{
    build_hybrid_port_model, load_current_spectra, recover_node_spectra,
    source_current_spectrum, HybridPortModel, ReducedNetwork,
};
pub use spec::{
    HarmonicEntry, LineSpec, LoadSpec, NetworkSpec, ResourceAttachment, SequenceParams,
    TheveninSpec,
};

use thiserror::Error;

/// Errors raised while validating or reducing a network.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("network topology error: {0}")]
    Topology(String),
    #[error("nodal system is singular at harmonic order {order}: {detail}")]
    Singular { order: i32, detail: String },
    #[error(transparent)]
    Resource(#[from] crate::resources::ResourceError),
}
