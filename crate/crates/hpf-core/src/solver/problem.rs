use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::network::{build_hybrid_port_model, HybridPortModel, NetworkSpec};
use crate::resources::{HarmonicResponse, PortRole, ResourceRegistry};
use crate::spectral::{PolyphaseSpectrum, SpectralParams};

use super::SolverError;

/// One port of the coupled problem: its node, role, and resource response.
pub struct PortBinding {
    pub node: usize,
    pub node_name: String,
    pub role: PortRole,
    pub response: Arc<dyn HarmonicResponse>,
}

/// The assembled harmonic power-flow problem: reduced grid plus one
/// response per port, in model port order (following ports first).
pub struct HpfProblem {
    pub sp: SpectralParams,
    pub grid: HybridPortModel,
    pub ports: Vec<PortBinding>,
}

impl HpfProblem {
    pub fn n_follow(&self) -> usize {
        self.grid.follow_nodes.len()
    }

    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    /// Real unknowns per port: positive orders, three phases, re/im.
    pub fn port_stride(&self) -> usize {
        self.sp.h_max() as usize * 6
    }

    pub fn n_unknowns(&self) -> usize {
        self.port_stride() * self.n_ports()
    }
}

/// Build the coupled problem from a network description: reduce the grid
/// onto the resource ports and construct each resource's lifted response.
pub fn build_problem(
    net: &NetworkSpec,
    sp: SpectralParams,
    registry: &ResourceRegistry,
) -> Result<HpfProblem, SolverError> {
    let grid = build_hybrid_port_model(net, sp)?;
    let mut ports = Vec::new();
    for (node, role) in grid.ports() {
        let attachment = net
            .resources
            .iter()
            .find(|r| r.node == node)
            .expect("port nodes come from the resource list");
        let node_name = net.node_name(node).to_string();
        let model =
            registry
                .build(&attachment.spec, &net.base)
                .map_err(|e| SolverError::Resource {
                    node: node_name.clone(),
                    source: e,
                })?;
        let response = model.response(sp).map_err(|e| SolverError::Resource {
            node: node_name.clone(),
            source: e,
        })?;
        debug_assert_eq!(response.role(), role);
        ports.push(PortBinding {
            node,
            node_name,
            role,
            response,
        });
    }
    Ok(HpfProblem { sp, grid, ports })
}

/// Decode one port's unknown slice into a full polyphase spectrum
/// (positive orders stored, negatives by conjugation, DC zero).
pub fn decode_port_spectrum(sp: SpectralParams, slice: &[f64]) -> PolyphaseSpectrum {
    let mut ps = PolyphaseSpectrum::zero(sp);
    let mut at = 0;
    for h in 1..=sp.h_max() {
        let mut coeffs = [Complex64::ZERO; 3];
        for c in coeffs.iter_mut() {
            *c = Complex64::new(slice[at], slice[at + 1]);
            at += 2;
        }
        ps.set_order_pair(h, coeffs).unwrap();
    }
    ps
}

/// Encode a spectrum back into an unknown slice (positive orders only).
pub fn encode_port_spectrum(sp: SpectralParams, ps: &PolyphaseSpectrum, out: &mut [f64]) {
    let mut at = 0;
    for h in 1..=sp.h_max() {
        for x in ps.at_order(h as i32) {
            out[at] = x.re;
            out[at + 1] = x.im;
            at += 2;
        }
    }
}

/// Solved state of one port.
#[derive(Debug, Clone)]
pub struct PortSolution {
    pub node: usize,
    pub node_name: String,
    pub role: PortRole,
    /// Terminal voltage spectrum, per-unit.
    pub voltage: PolyphaseSpectrum,
    /// Injected current spectrum, per-unit.
    pub current: PolyphaseSpectrum,
}

/// Converged harmonic power-flow solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct HpfSolution {
    pub ports: Vec<PortSolution>,
    pub converged: bool,
    pub iterations: usize,
    /// Residual infinity norm after each iteration, starting with the
    /// initial point.
    pub residual_history: Vec<f64>,
    /// Residual re-evaluated independently at the returned solution.
    pub verified_residual: f64,
    /// Raw unknown vector at the solution.
    pub x: DVector<f64>,
}

impl HpfSolution {
    pub fn port_by_name(&self, name: &str) -> Option<&PortSolution> {
        self.ports.iter().find(|p| p.node_name == name)
    }

    /// Largest component-wise difference of the unknown vectors.
    pub fn max_unknown_diff(&self, other: &HpfSolution) -> f64 {
        (&self.x - &other.x).amax()
    }
}
