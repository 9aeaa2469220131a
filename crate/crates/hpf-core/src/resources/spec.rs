use crate::components::{ControllerStageParams, FilterKind, FilterStageParams, LegConfig};
use crate::pu::PerUnit;

use super::ResourceError;

/// Resource control philosophy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiderKind {
    /// Voltage/frequency regulating unit (slack-capable).
    Forming,
    /// Power-tracking unit synchronized to the grid voltage.
    Following,
}

impl CiderKind {
    pub fn name(&self) -> &'static str {
        match self {
            CiderKind::Forming => "forming",
            CiderKind::Following => "following",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ResourceError> {
        match name {
            "forming" => Ok(CiderKind::Forming),
            "following" => Ok(CiderKind::Following),
            other => Err(ResourceError::UnknownKind(other.into())),
        }
    }
}

/// Operating setpoint of a resource.
///
/// Forming units regulate an output-voltage magnitude at the fundamental
/// frequency (which must equal the system fundamental for a steady state to
/// exist); following units track an active/reactive power pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setpoint {
    Forming {
        /// Phase voltage setpoint, RMS.
        v_rms: f64,
        /// Frequency setpoint, Hz.
        f_hz: f64,
    },
    Following {
        /// Active power, three-phase total.
        p: f64,
        /// Reactive power, three-phase total.
        q: f64,
    },
}

/// One matched filter/controller stage pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagePair {
    pub filter: FilterStageParams,
    pub controller: ControllerStageParams,
}

/// Full description of one converter-interfaced resource.
///
/// Stages are ordered from the actuator outward: `[L, C]` for forming
/// (four-leg) units and `[L, C, L]` for following (three-leg) units.
#[derive(Debug, Clone, PartialEq)]
pub struct CiderSpec {
    pub kind: CiderKind,
    pub legs: LegConfig,
    pub stages: Vec<StagePair>,
    pub rated_power_va: f64,
    pub setpoint: Setpoint,
}

impl CiderSpec {
    /// Validate the stage layout and setpoint against the resource kind.
    pub fn validate(&self) -> Result<(), ResourceError> {
        let kinds: Vec<FilterKind> = self.stages.iter().map(|s| s.filter.kind).collect();
        match self.kind {
            CiderKind::Forming => {
                if kinds != [FilterKind::Inductive, FilterKind::Capacitive] {
                    return Err(ResourceError::StageMismatch(format!(
                        "forming resource expects stages [L, C], got {kinds:?}"
                    )));
                }
                if self.legs != LegConfig::FourLeg {
                    return Err(ResourceError::StageMismatch(
                        "forming resource uses a four-leg converter".into(),
                    ));
                }
                match self.setpoint {
                    Setpoint::Forming { v_rms, f_hz } => {
                        if !(v_rms >= 0.0) || !(f_hz > 0.0) {
                            return Err(ResourceError::InvalidParameter(
                                "forming setpoint requires v_rms >= 0 and f_hz > 0".into(),
                            ));
                        }
                    }
                    _ => {
                        return Err(ResourceError::StageMismatch(
                            "forming resource requires a voltage/frequency setpoint".into(),
                        ))
                    }
                }
            }
            CiderKind::Following => {
                if kinds
                    != [
                        FilterKind::Inductive,
                        FilterKind::Capacitive,
                        FilterKind::Inductive,
                    ]
                {
                    return Err(ResourceError::StageMismatch(format!(
                        "following resource expects stages [L, C, L], got {kinds:?}"
                    )));
                }
                if self.legs != LegConfig::ThreeLeg {
                    return Err(ResourceError::StageMismatch(
                        "following resource uses a three-leg converter".into(),
                    ));
                }
                if !matches!(self.setpoint, Setpoint::Following { .. }) {
                    return Err(ResourceError::StageMismatch(
                        "following resource requires a power setpoint".into(),
                    ));
                }
            }
        }
        for s in &self.stages {
            s.filter.validate()?;
            s.controller.validate()?;
        }
        Ok(())
    }

    /// Normalize filter parameters and setpoints to the system base.
    /// Controller gains are already expressed in per-unit and integration
    /// times are in seconds, so both carry over unchanged.
    pub fn to_per_unit(&self, pu: &PerUnit) -> CiderSpec {
        let stages = self
            .stages
            .iter()
            .map(|s| {
                let filter = match s.filter.kind {
                    FilterKind::Inductive => FilterStageParams::inductive(
                        pu.inductance_pu(s.filter.series_value),
                        pu.impedance_pu(s.filter.loss_value),
                    ),
                    FilterKind::Capacitive => FilterStageParams::capacitive(
                        pu.capacitance_pu(s.filter.series_value),
                        pu.admittance_pu(s.filter.loss_value),
                    ),
                };
                StagePair {
                    filter,
                    controller: s.controller,
                }
            })
            .collect();
        let setpoint = match self.setpoint {
            Setpoint::Forming { v_rms, f_hz } => Setpoint::Forming {
                v_rms: pu.voltage_pu(v_rms),
                f_hz,
            },
            Setpoint::Following { p, q } => Setpoint::Following {
                p: pu.power_pu(p),
                q: pu.power_pu(q),
            },
        };
        CiderSpec {
            kind: self.kind,
            legs: self.legs,
            stages,
            rated_power_va: pu.power_pu(self.rated_power_va),
            setpoint,
        }
    }

    /// Standard 100 kVA forming unit used throughout the validation studies.
    pub fn forming_100kva(v_set_rms: f64, f_hz: f64) -> CiderSpec {
        CiderSpec {
            kind: CiderKind::Forming,
            legs: LegConfig::FourLeg,
            stages: vec![
                StagePair {
                    filter: FilterStageParams::inductive(0.2e-3, 0.61e-3),
                    controller: ControllerStageParams::new(15.0, 0.03, 1.0),
                },
                StagePair {
                    filter: FilterStageParams::capacitive(150e-6, 0.0),
                    controller: ControllerStageParams::new(0.05, 2.5e-4, 0.0),
                },
            ],
            rated_power_va: 100e3,
            setpoint: Setpoint::Forming {
                v_rms: v_set_rms,
                f_hz,
            },
        }
    }

    /// Standard 60 kVA following unit used throughout the validation studies.
    pub fn following_60kva(p_w: f64, q_var: f64) -> CiderSpec {
        CiderSpec {
            kind: CiderKind::Following,
            legs: LegConfig::ThreeLeg,
            stages: vec![
                StagePair {
                    filter: FilterStageParams::inductive(325e-6, 1.02e-3),
                    controller: ControllerStageParams::new(10.5, 6.6e-4, 1.0),
                },
                StagePair {
                    filter: FilterStageParams::capacitive(90.3e-6, 0.0),
                    controller: ControllerStageParams::new(1.0, 2.6e-3, 0.0),
                },
                StagePair {
                    filter: FilterStageParams::inductive(325e-6, 1.02e-3),
                    controller: ControllerStageParams::new(0.2, 0.1, 1.0),
                },
            ],
            rated_power_va: 60e3,
            setpoint: Setpoint::Following { p: p_w, q: q_var },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_validation() {
        assert!(CiderSpec::forming_100kva(230.0, 50.0).validate().is_ok());
        assert!(CiderSpec::following_60kva(50e3, 16.4e3).validate().is_ok());

        let mut bad = CiderSpec::forming_100kva(230.0, 50.0);
        bad.stages.reverse();
        assert!(bad.validate().is_err());

        let mut bad = CiderSpec::following_60kva(50e3, 16.4e3);
        bad.legs = LegConfig::FourLeg;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn per_unit_conversion_scales_filters_and_setpoints() {
        let pu = PerUnit::new(230.0, 10e3);
        let spec = CiderSpec::following_60kva(50e3, 16.4e3).to_per_unit(&pu);
        let zb = pu.z_base_ohm();
        assert!((spec.stages[0].filter.series_value - 325e-6 / zb).abs() < 1e-15);
        assert!((spec.stages[1].filter.series_value - 90.3e-6 * zb).abs() < 1e-12);
        match spec.setpoint {
            Setpoint::Following { p, q } => {
                assert!((p - 5.0).abs() < 1e-12);
                assert!((q - 1.64).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        // Gains are untouched.
        assert_eq!(spec.stages[0].controller.k_fb, 10.5);
    }
}
