//! Per-unit normalization.
//!
//! All solver-facing quantities are normalized to a common system base:
//! phase voltage base `V_b` (RMS volts) and three-phase power base `S_b`
//! (VA). The derived bases follow the usual three-phase convention
//! `I_b = S_b / (3 V_b)` and `Z_b = V_b / I_b = 3 V_b^2 / S_b`. Time is not
//! normalized, so inductances and capacitances in per-unit carry units of
//! seconds (`L/Z_b`, `C*Z_b`).

/// System base quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerUnit {
    /// Phase-to-neutral voltage base, RMS volts.
    pub v_base_v: f64,
    /// Three-phase power base, VA.
    pub s_base_va: f64,
}

impl PerUnit {
    pub fn new(v_base_v: f64, s_base_va: f64) -> Self {
        assert!(v_base_v > 0.0 && s_base_va > 0.0);
        Self { v_base_v, s_base_va }
    }

    /// Current base in RMS amperes.
    pub fn i_base_a(&self) -> f64 {
        self.s_base_va / (3.0 * self.v_base_v)
    }

    /// Impedance base in ohms.
    pub fn z_base_ohm(&self) -> f64 {
        3.0 * self.v_base_v * self.v_base_v / self.s_base_va
    }

    pub fn voltage_pu(&self, v: f64) -> f64 {
        v / self.v_base_v
    }

    pub fn current_pu(&self, i: f64) -> f64 {
        i / self.i_base_a()
    }

    pub fn power_pu(&self, s: f64) -> f64 {
        s / self.s_base_va
    }

    pub fn impedance_pu(&self, z: f64) -> f64 {
        z / self.z_base_ohm()
    }

    pub fn admittance_pu(&self, y: f64) -> f64 {
        y * self.z_base_ohm()
    }

    /// Inductance to per-unit (result has units of seconds).
    pub fn inductance_pu(&self, l: f64) -> f64 {
        l / self.z_base_ohm()
    }

    /// Capacitance to per-unit (result has units of seconds).
    pub fn capacitance_pu(&self, c: f64) -> f64 {
        c * self.z_base_ohm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_bases() {
        let pu = PerUnit::new(230.0, 10_000.0);
        assert!((pu.i_base_a() - 10_000.0 / 690.0).abs() < 1e-12);
        assert!((pu.z_base_ohm() - 3.0 * 230.0 * 230.0 / 10_000.0).abs() < 1e-12);
        // Round trip: Z = V / I.
        assert!((pu.z_base_ohm() - pu.v_base_v / pu.i_base_a()).abs() < 1e-12);
    }
}
