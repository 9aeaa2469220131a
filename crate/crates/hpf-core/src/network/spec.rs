use crate::pu::PerUnit;
use crate::resources::CiderSpec;

use super::NetworkError;

/// Sequence-domain per-kilometer parameters of a cable type. Negative-
/// sequence values equal the positive-sequence ones for passive lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceParams {
    pub r1_ohm_per_km: f64,
    pub r0_ohm_per_km: f64,
    pub l1_h_per_km: f64,
    pub l0_h_per_km: f64,
    pub c1_f_per_km: f64,
    pub c0_f_per_km: f64,
}

/// One pi-section line between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    pub seq: SequenceParams,
}

/// Unbalanced wye-connected constant-impedance load. `weights` distribute
/// the total apparent power over the phases and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub node: usize,
    pub s_va: f64,
    pub pf: f64,
    pub weights: [f64; 3],
}

/// One entry of the source harmonic table: magnitude as a fraction of the
/// fundamental, phase in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicEntry {
    pub h: u32,
    pub mag: f64,
    pub phase_deg: f64,
}

/// Stiff source behind a short-circuit impedance, with harmonic content.
#[derive(Debug, Clone, PartialEq)]
pub struct TheveninSpec {
    pub node: usize,
    /// Nominal phase voltage, RMS volts.
    pub v_n_rms: f64,
    /// Short-circuit power, VA.
    pub s_sc_va: f64,
    /// Short-circuit impedance magnitude, ohms.
    pub z_sc_ohm: f64,
    /// Resistance-to-reactance ratio of the short-circuit impedance.
    pub r_over_x: f64,
    /// Harmonic voltage table; must contain the fundamental at 1.0 and 0 deg.
    pub harmonics: Vec<HarmonicEntry>,
}

impl TheveninSpec {
    /// Series resistance and fundamental reactance of the source branch.
    pub fn rx_ohm(&self) -> (f64, f64) {
        let denom = (1.0 + self.r_over_x * self.r_over_x).sqrt();
        let x = self.z_sc_ohm / denom;
        (x * self.r_over_x, x)
    }

    /// Series inductance of the source branch at fundamental `f1`.
    pub fn inductance_h(&self, f1_hz: f64) -> f64 {
        self.rx_ohm().1 / (2.0 * std::f64::consts::PI * f1_hz)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.v_n_rms > 0.0 && self.s_sc_va > 0.0 && self.z_sc_ohm > 0.0 && self.r_over_x >= 0.0)
        {
            return Err(NetworkError::InvalidElement(
                "source parameters must be positive".into(),
            ));
        }
        // The magnitude implied by the short-circuit power must agree with
        // the stated impedance.
        let implied = self.v_n_rms * self.v_n_rms / self.s_sc_va;
        if (implied - self.z_sc_ohm).abs() > 0.05 * self.z_sc_ohm {
            return Err(NetworkError::InvalidElement(format!(
                "short-circuit impedance {:.4} ohm inconsistent with V^2/S = {:.4} ohm",
                self.z_sc_ohm, implied
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut has_fundamental = false;
        for e in &self.harmonics {
            if !seen.insert(e.h) {
                return Err(NetworkError::InvalidElement(format!(
                    "duplicate harmonic entry h = {}",
                    e.h
                )));
            }
            if !(0.0..=1.0).contains(&e.mag) {
                return Err(NetworkError::InvalidElement(format!(
                    "harmonic magnitude {} at h = {} outside [0, 1]",
                    e.mag, e.h
                )));
            }
            if e.h == 1 {
                has_fundamental = true;
                if (e.mag - 1.0).abs() > 1e-12 || e.phase_deg.abs() > 1e-12 {
                    return Err(NetworkError::InvalidElement(
                        "fundamental source entry must be 1.0 at 0 deg".into(),
                    ));
                }
            }
        }
        if !has_fundamental {
            return Err(NetworkError::InvalidElement(
                "source table must contain the fundamental".into(),
            ));
        }
        Ok(())
    }
}

/// A resource attached to a network node. The specification is kept in SI
/// units and normalized when models are built.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceAttachment {
    pub node: usize,
    pub spec: CiderSpec,
}

/// Complete network description in SI units plus the system base.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub base: PerUnit,
    pub f1_hz: f64,
    pub node_names: Vec<String>,
    pub lines: Vec<LineSpec>,
    pub loads: Vec<LoadSpec>,
    pub thevenin: TheveninSpec,
    pub resources: Vec<ResourceAttachment>,
}

impl NetworkSpec {
    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_index(&self, name: &str) -> Result<usize, NetworkError> {
        self.node_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| NetworkError::UnknownNode(name.into()))
    }

    pub fn node_name(&self, idx: usize) -> &str {
        &self.node_names[idx]
    }

    /// Validate element parameters, node references, and connectivity of
    /// every node to the source node.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let n = self.n_nodes();
        let check_node = |i: usize, what: &str| {
            if i >= n {
                Err(NetworkError::UnknownNode(format!("{what} node #{i}")))
            } else {
                Ok(())
            }
        };
        self.thevenin.validate()?;
        check_node(self.thevenin.node, "source")?;
        for l in &self.lines {
            check_node(l.from, "line from")?;
            check_node(l.to, "line to")?;
            if !(l.length_m > 0.0) {
                return Err(NetworkError::InvalidElement(format!(
                    "line {} - {} has non-positive length",
                    self.node_name(l.from),
                    self.node_name(l.to)
                )));
            }
        }
        for load in &self.loads {
            check_node(load.node, "load")?;
            if !(load.pf > 0.0 && load.pf <= 1.0) {
                return Err(NetworkError::InvalidElement(format!(
                    "load at {} has power factor {} outside (0, 1]",
                    self.node_name(load.node),
                    load.pf
                )));
            }
            let sum: f64 = load.weights.iter().sum();
            if load.weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 0.02 {
                return Err(NetworkError::InvalidElement(format!(
                    "load weights at {} must be non-negative and sum to 1",
                    self.node_name(load.node)
                )));
            }
        }
        for r in &self.resources {
            check_node(r.node, "resource")?;
            r.spec.validate()?;
        }

        // Connectivity: every node must reach the source through lines.
        let mut reach = vec![false; n];
        let mut stack = vec![self.thevenin.node];
        reach[self.thevenin.node] = true;
        while let Some(i) = stack.pop() {
            for l in &self.lines {
                for (a, b) in [(l.from, l.to), (l.to, l.from)] {
                    if a == i && !reach[b] {
                        reach[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        let isolated: Vec<&str> = (0..n)
            .filter(|&i| !reach[i])
            .map(|i| self.node_name(i))
            .collect();
        if !isolated.is_empty() {
            return Err(NetworkError::Topology(format!(
                "nodes not connected to the source: {}",
                isolated.join(", ")
            )));
        }
        Ok(())
    }

    /// Highest harmonic order present in the source table.
    pub fn max_source_order(&self) -> u32 {
        self.thevenin.harmonics.iter().map(|e| e.h).max().unwrap_or(1)
    }
}
