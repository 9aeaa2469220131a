//! Complete converter-interfaced resource models.
//!
//! A resource couples a power-hardware block (actuator plus filter cascade,
//! modeled in phase coordinates) with a control-software block (cascaded PI
//! stages, modeled in the rotating DQ frame) through the DQ transform pair.
//! Two interchangeable variants are provided behind the [`ResourceModel`]
//! trait and selected by name through the [`ResourceRegistry`]:
//!
//! - `forming`: LC filter, two control stages, four-leg converter. Regulates
//!   its output voltage; its harmonic response maps an injected-current
//!   spectrum to the port-voltage spectrum.
//! - `following`: LCL filter, three control stages, three-leg converter.
//!   Tracks a power setpoint; its harmonic response maps the port-voltage
//!   spectrum to the injected-current spectrum and is nonlinear through the
//!   reference-current calculation.
//!
//! Each variant offers two consistent realizations: the lifted harmonic-
//! domain closed loop used by the power-flow solver, and a time-domain
//! realization used by the simulation oracle.

mod lifted;
mod reference;
mod registry;
mod spec;
mod statespace;
mod timedomain;

pub use lifted::{LiftedCider, ResponseOutput};
pub use reference::{following_reference, forming_reference, reciprocal_coefficients};
pub use registry::{HarmonicResponse, PortRole, ResourceModel, ResourceRegistry};
pub use spec::{CiderKind, CiderSpec, Setpoint, StagePair};
pub use statespace::{
    build_following_statespace, build_forming_statespace, closed_loop_dq_matrix,
    compose_controller_cascade, LtpStateSpace, StateSpaceDims,
};
pub use timedomain::{CiderDynamics, PortAttachment, ResourceDynamics};

use thiserror::Error;

/// Errors raised while building or evaluating resource models.
#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("stage layout does not match resource kind: {0}")]
    StageMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operating point is singular: {0}")]
    SingularOperatingPoint(String),
    #[error("lifted steady-state operator is singular at harmonic order {order}")]
    ResonantOrder { order: i32 },
    #[error("closed loop is not asymptotically stable (eigenvalue with real part {re:.3e})")]
    Unstable { re: f64 },
    #[error("unknown resource kind '{0}'")]
    UnknownKind(String),
    #[error(transparent)]
    Component(#[from] crate::components::ComponentError),
}
