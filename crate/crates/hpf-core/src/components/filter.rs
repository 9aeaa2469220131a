use nalgebra::Matrix2;

use super::ComponentError;
use crate::spectral::SpectralParams;

/// Kind of a filter stage: series inductors filter currents, shunt
/// capacitors filter voltages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Inductive,
    Capacitive,
}

/// Parameters of one filter stage. Per-phase elements are identical, so the
/// compound matrices are scalar times identity.
///
/// For an inductive stage `series_value` is the inductance L and
/// `loss_value` the series resistance R; for a capacitive stage they are
/// the capacitance C and shunt conductance G. Units are free as long as
/// they are consistent across one model (SI or per-unit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterStageParams {
    pub kind: FilterKind,
    pub series_value: f64,
    pub loss_value: f64,
}

impl FilterStageParams {
    pub fn inductive(l: f64, r: f64) -> Self {
        Self {
            kind: FilterKind::Inductive,
            series_value: l,
            loss_value: r,
        }
    }

    pub fn capacitive(c: f64, g: f64) -> Self {
        Self {
            kind: FilterKind::Capacitive,
            series_value: c,
            loss_value: g,
        }
    }

    pub fn validate(&self) -> Result<(), ComponentError> {
        if !(self.series_value > 0.0) {
            return Err(ComponentError::InvalidParameter {
                name: "series_value",
                value: self.series_value,
                reason: "must be positive",
            });
        }
        if self.loss_value < 0.0 {
            return Err(ComponentError::InvalidParameter {
                name: "loss_value",
                value: self.loss_value,
                reason: "must be non-negative",
            });
        }
        Ok(())
    }
}

/// First-order per-phase dynamics of one filter stage, in normalized form
/// `d(state)/dt = a*state + b_in*in - b_out*out_coupling`.
///
/// Inductive: `dI/dt = (1/L)(V_in - V_out) - (R/L) I`.
/// Capacitive: `dV/dt = (1/C)(I_in - I_out) - (G/C) V`.
#[derive(Debug, Clone, Copy)]
pub struct FilterStageOde {
    pub kind: FilterKind,
    /// State self-coupling, `-R/L` or `-G/C`.
    pub a: f64,
    /// Input gain, `1/L` or `1/C`.
    pub b: f64,
}

impl FilterStageOde {
    /// State derivative given the through/across drive `delta`
    /// (`V_in - V_out` for inductive, `I_in - I_out` for capacitive).
    pub fn derivative(&self, state: f64, delta: f64) -> f64 {
        self.a * state + self.b * delta
    }
}

/// Continuous-time block of an inductive stage.
pub fn inductive_stage_ode(p: &FilterStageParams) -> Result<FilterStageOde, ComponentError> {
    if p.kind != FilterKind::Inductive {
        return Err(ComponentError::WrongStageKind {
            expected: FilterKind::Inductive,
            got: p.kind,
        });
    }
    p.validate()?;
    Ok(FilterStageOde {
        kind: p.kind,
        a: -p.loss_value / p.series_value,
        b: 1.0 / p.series_value,
    })
}

/// Continuous-time block of a capacitive stage.
pub fn capacitive_stage_ode(p: &FilterStageParams) -> Result<FilterStageOde, ComponentError> {
    if p.kind != FilterKind::Capacitive {
        return Err(ComponentError::WrongStageKind {
            expected: FilterKind::Capacitive,
            got: p.kind,
        });
    }
    p.validate()?;
    Ok(FilterStageOde {
        kind: p.kind,
        a: -p.loss_value / p.series_value,
        b: 1.0 / p.series_value,
    })
}

/// Filter parameters restated in the rotating DQ frame.
///
/// The frame change of the filter dynamics adds the rotation-induced
/// coupling between the D and Q channels: for an inductive stage
/// `R_dq = [[R, -w1 L], [w1 L, R]]` with `L_dq = L*I`, and analogously
/// `G_dq = [[G, -w1 C], [w1 C, G]]` with `C_dq = C*I`. The off-diagonal
/// entries are the usual decoupling terms of DQ current/voltage control.
/// Returns `(loss_dq, storage_dq)`.
pub fn dq_restated_params(p: &FilterStageParams, sp: SpectralParams) -> (Matrix2<f64>, Matrix2<f64>) {
    let w1 = sp.omega1();
    let coupling = w1 * p.series_value;
    let loss = Matrix2::new(p.loss_value, -coupling, coupling, p.loss_value);
    let storage = Matrix2::identity() * p.series_value;
    (loss, storage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dq_transform_coefficients;
    use nalgebra::DMatrix;

    fn forming_alpha() -> FilterStageParams {
        FilterStageParams::inductive(0.2e-3, 0.61e-3)
    }

    fn forming_phi() -> FilterStageParams {
        FilterStageParams::capacitive(150e-6, 0.0)
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(inductive_stage_ode(&forming_phi()).is_err());
        assert!(capacitive_stage_ode(&forming_alpha()).is_err());
    }

    #[test]
    fn dc_equilibrium_has_zero_derivative() {
        let ode = inductive_stage_ode(&forming_alpha()).unwrap();
        let i0 = 37.0;
        let delta = 0.61e-3 * i0; // V_in - V_out = R*I0
        assert!(ode.derivative(i0, delta).abs() < 1e-9);
    }

    #[test]
    fn step_response_time_constant_matches_integration() {
        // Integrate dI/dt = (V - R I)/L with a unit step and compare the
        // 63.2% crossing against tau = L/R.
        let p = forming_alpha();
        let ode = inductive_stage_ode(&p).unwrap();
        let tau = p.series_value / p.loss_value;
        let i_final = 1.0 / p.loss_value;
        let dt = tau / 2e4;
        let mut i = 0.0f64;
        let mut t = 0.0f64;
        let mut crossing = None;
        while t < 3.0 * tau {
            // RK4 on the scalar stage.
            let f = |x: f64| ode.derivative(x, 1.0);
            let k1 = f(i);
            let k2 = f(i + 0.5 * dt * k1);
            let k3 = f(i + 0.5 * dt * k2);
            let k4 = f(i + dt * k3);
            i += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
            if crossing.is_none() && i >= (1.0 - (-1.0f64).exp()) * i_final {
                crossing = Some(t);
            }
        }
        let crossing = crossing.expect("reaches 63.2%");
        assert!(
            (crossing - tau).abs() / tau < 0.01,
            "time constant off: {crossing} vs {tau}"
        );
    }

    #[test]
    fn capacitive_pure_integrator_lags_by_90_degrees() {
        // G = 0: V(t) responds to I cos(wt) as (I/(wC)) sin(wt).
        let p = forming_phi();
        let ode = capacitive_stage_ode(&p).unwrap();
        let w = 2.0 * std::f64::consts::PI * 50.0;
        let dt = 1e-6;
        let mut v = 0.0f64;
        let mut t = 0.0f64;
        // Start from the periodic orbit value V(0) = 0 for sin response.
        while t < 0.2 {
            let f = |x: f64, tt: f64| ode.derivative(x, (w * tt).cos());
            let k1 = f(v, t);
            let k2 = f(v + 0.5 * dt * k1, t + 0.5 * dt);
            let k3 = f(v + 0.5 * dt * k2, t + 0.5 * dt);
            let k4 = f(v + dt * k3, t + dt);
            v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        let want = (w * t).sin() / (w * p.series_value);
        assert!((v - want).abs() < 1e-3 * want.abs().max(1.0));
    }

    #[test]
    fn harmonic_admittance_of_capacitive_stage() {
        let p = FilterStageParams::capacitive(90.3e-6, 2e-4);
        let sp = SpectralParams::new(50.0, 25);
        for h in 1..=25 {
            let y = num_complex::Complex64::new(
                p.loss_value,
                h as f64 * sp.omega1() * p.series_value,
            );
            // Direct frequency response of dV/dt = (I - G V)/C at order h:
            // V = I / (G + j h w C), so the admittance I/V is G + j h w C.
            let jhw = num_complex::Complex64::new(0.0, h as f64 * sp.omega1());
            let v = 1.0 / (jhw * p.series_value + p.loss_value);
            let y_from_ode = 1.0 / v;
            assert!((y - y_from_ode).norm() < 1e-12 * y.norm());
        }
    }

    #[test]
    fn dq_restatement_values_and_stationary_limit() {
        let sp = SpectralParams::new(50.0, 25);
        let (r_dq, l_dq) = dq_restated_params(&forming_alpha(), sp);
        assert!((r_dq[(0, 1)] + 0.06283185307179587).abs() < 1e-12);
        assert!((r_dq[(1, 0)] - 0.06283185307179587).abs() < 1e-12);
        assert!((r_dq[(0, 0)] - 0.61e-3).abs() < 1e-15);
        assert!((l_dq - Matrix2::identity() * 0.2e-3).norm() < 1e-15);

        let sp_slow = SpectralParams::new(1e-9, 1);
        let (r0, _) = dq_restated_params(&forming_alpha(), sp_slow);
        assert!((r0 - Matrix2::identity() * 0.61e-3).norm() < 1e-10);
    }

    #[test]
    fn dq_restatement_equals_frame_transformed_dynamics_at_random_times() {
        // T_dq_abc (R I) T_abc_dq + T_dq_abc L (d/dt T_abc_dq) must be
        // time-invariant and equal the restated matrix.
        let p = forming_alpha();
        let sp = SpectralParams::new(50.0, 25);
        let (r_dq, _) = dq_restated_params(&p, sp);
        let t = dq_transform_coefficients(0.37);
        let w1 = sp.omega1();
        let r_abc = t
            .dq_from_abc
            .mul(&t.abc_from_dq)
            .scaled(p.loss_value);
        let l_rot = t
            .dq_from_abc
            .mul(&t.abc_from_dq.time_derivative(w1))
            .scaled(p.series_value);
        let total = r_abc.add(&l_rot);
        for k in 0..20 {
            let time = 0.13 * k as f64 / 7.0;
            let m = total.eval_real(w1, time);
            let want = DMatrix::from_fn(2, 2, |r, c| r_dq[(r, c)]);
            assert!(
                (m - &want).norm() < 1e-10,
                "restated params not time-invariant at t={time}"
            );
        }
    }
}
