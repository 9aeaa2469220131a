//! Component library for converter-interfaced resources: filter stages,
//! controller stages, and the grid/converter frame-coupling matrices.
//!
//! Filter stages are first-order per-phase elements with scalar-times-
//! identity compound parameters; controller stages are PI feedback blocks
//! with proportional feed-through and feed-forward terms. Complete
//! resources are assembled from cascades of matched filter/controller
//! stage pairs in the [`crate::resources`] module.

mod controller;
mod filter;
mod frame;

pub use controller::{controller_stage_law, ControllerStageParams, ControllerStageLaw};
pub use filter::{
    capacitive_stage_ode, dq_restated_params, inductive_stage_ode, FilterKind, FilterStageParams,
    FilterStageOde,
};
pub use frame::{FrameCoupling, LegConfig};

use thiserror::Error;

/// Errors raised by component constructors.
#[derive(Debug, Error)]
pub enum ComponentError {
    #[error("operation expects a {expected:?} filter stage, got {got:?}")]
    WrongStageKind { expected: FilterKind, got: FilterKind },
    #[error("invalid parameter {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}
