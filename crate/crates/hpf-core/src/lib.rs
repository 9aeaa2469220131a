//! Harmonic power-flow (HPF) engine for three-phase four-wire grids hosting
//! converter-interfaced resources (grid-forming and grid-following inverters).
//!
//! The engine models each resource as a linear time-periodic system lifted
//! into the harmonic domain (block-Toeplitz form over a symmetric set of
//! harmonic orders), couples the resources through a Kron-reduced polyphase
//! network model, and solves the resulting nonlinear steady-state problem
//! with a damped Newton-Raphson iteration. A built-in time-domain simulator
//! with DFT spectrum extraction serves as an independent reference for
//! validating the harmonic-domain solution.
//!
//! Module map:
//! - [`spectral`]: harmonic index sets, two-sided spectra, Toeplitz lifting,
//!   Fortescue and DQ transforms.
//! - [`components`]: filter-stage and controller-stage building blocks.
//! - [`resources`]: complete grid-forming / grid-following resource models,
//!   registered by name behind the [`resources::ResourceModel`] trait.
//! - [`network`]: polyphase network model and hybrid port reduction.
//! - [`solver`]: the Newton-Raphson harmonic power-flow solver.
//! - [`tds`]: time-domain simulation, DFT extraction, and error metrics.

pub mod components;
pub mod network;
pub mod pu;
pub mod resources;
pub mod solver;
pub mod spectral;
pub mod tds;
