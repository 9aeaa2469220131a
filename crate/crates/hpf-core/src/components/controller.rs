use nalgebra::{Matrix2, Vector2};

use super::ComponentError;

/// Gains of one controller stage: PI feedback, proportional feed-through,
/// and the feed-forward matrix derived from the matched filter stage.
///
/// Feedback and feed-through gains act as scalar times identity on the two
/// DQ channels. The feed-forward gain is the DQ-restated loss matrix of the
/// matched filter stage (including decoupling terms), which is what gives
/// the cascade zero steady-state tracking error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerStageParams {
    /// Proportional feedback gain.
    pub k_fb: f64,
    /// Integration time of the feedback PI term, seconds.
    pub t_fb: f64,
    /// Feed-through gain toward the next-outer measurement.
    pub k_ft: f64,
}

impl ControllerStageParams {
    pub fn new(k_fb: f64, t_fb: f64, k_ft: f64) -> Self {
        Self { k_fb, t_fb, k_ft }
    }

    pub fn validate(&self) -> Result<(), ComponentError> {
        if !(self.t_fb > 0.0) {
            return Err(ComponentError::InvalidParameter {
                name: "t_fb",
                value: self.t_fb,
                reason: "integration time must be positive",
            });
        }
        Ok(())
    }
}

/// One controller stage as an explicit two-channel block:
///
/// state     x = integral of (reference - measurement)
/// output    out = K_fb (err + x / T_fb) + K_ft * ft_meas + K_ff * reference
///
/// with `err = reference - measurement` and `K_ff` the DQ-restated filter
/// loss matrix supplied by the caller.
#[derive(Debug, Clone)]
pub struct ControllerStageLaw {
    pub gains: ControllerStageParams,
    pub k_ff: Matrix2<f64>,
}

impl ControllerStageLaw {
    /// State derivative: the integrated tracking error.
    pub fn state_derivative(&self, reference: Vector2<f64>, measurement: Vector2<f64>) -> Vector2<f64> {
        reference - measurement
    }

    /// Stage output (the reference handed to the next-inner stage).
    pub fn output(
        &self,
        state: Vector2<f64>,
        reference: Vector2<f64>,
        measurement: Vector2<f64>,
        ft_measurement: Vector2<f64>,
    ) -> Vector2<f64> {
        let err = reference - measurement;
        (err + state / self.gains.t_fb) * self.gains.k_fb
            + ft_measurement * self.gains.k_ft
            + self.k_ff * reference
    }
}

/// Build the control law of one stage. The feed-forward matrix comes from
/// [`super::dq_restated_params`] of the matched filter stage.
pub fn controller_stage_law(
    c: &ControllerStageParams,
    ff: Matrix2<f64>,
) -> Result<ControllerStageLaw, ComponentError> {
    c.validate()?;
    Ok(ControllerStageLaw { gains: *c, k_ff: ff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{dq_restated_params, inductive_stage_ode, FilterStageParams};
    use crate::spectral::SpectralParams;

    #[test]
    fn rejects_nonpositive_integration_time() {
        let c = ControllerStageParams::new(0.05, 0.0, 0.0);
        assert!(controller_stage_law(&c, Matrix2::zeros()).is_err());
    }

    #[test]
    fn zero_everything_gives_zero_output() {
        let c = ControllerStageParams::new(0.05, 2.5e-4, 0.0);
        let law = controller_stage_law(&c, Matrix2::zeros()).unwrap();
        let z = Vector2::zeros();
        assert_eq!(law.output(z, z, z, z), z);
    }

    #[test]
    fn closed_loop_tracks_dc_reference_with_zero_error() {
        // Inductive stage under its controller with the matched feed-forward
        // gain: integrate the DQ-frame closed loop to steady state and check
        // the current reaches the reference exactly.
        let sp = SpectralParams::new(50.0, 25);
        let filt = FilterStageParams::inductive(0.2e-3, 0.61e-3);
        let (r_dq, l_dq) = dq_restated_params(&filt, sp);
        let gains = ControllerStageParams::new(15.0, 0.03, 0.0);
        let law = controller_stage_law(&gains, r_dq).unwrap();
        let ode = inductive_stage_ode(&filt).unwrap();
        let _ = ode;

        // DQ-frame plant: L dI/dt = V - R_dq I (decoupling forces a 2x2 ODE).
        let l = l_dq[(0, 0)];
        let reference = Vector2::new(3.0, -1.5);
        let mut i = Vector2::zeros();
        let mut x = Vector2::zeros();
        let dt = 1e-6;
        let mut t = 0.0;
        while t < 0.4 {
            let f = |i: Vector2<f64>, x: Vector2<f64>| {
                let v = law.output(x, reference, i, Vector2::zeros());
                let di = (v - r_dq * i) / l;
                let dx = law.state_derivative(reference, i);
                (di, dx)
            };
            let (k1i, k1x) = f(i, x);
            let (k2i, k2x) = f(i + 0.5 * dt * k1i, x + 0.5 * dt * k1x);
            let (k3i, k3x) = f(i + 0.5 * dt * k2i, x + 0.5 * dt * k2x);
            let (k4i, k4x) = f(i + dt * k3i, x + dt * k3x);
            i += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            t += dt;
        }
        assert!(
            (i - reference).norm() < 1e-6,
            "steady-state tracking error {:.3e}",
            (i - reference).norm()
        );
    }
}
