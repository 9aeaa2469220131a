use nalgebra::{Matrix3, SMatrix, Vector2, Vector3};
use num_complex::Complex64;

use crate::components::FrameCoupling;
use crate::spectral::SpectralParams;

use super::statespace::stage_gain_sets;
use super::{
    compose_controller_cascade, forming_reference, CiderKind, CiderSpec, ResourceError, Setpoint,
};

/// How a resource couples to its port node in the time-domain simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PortAttachment {
    /// Injects current through its own grid-side inductor.
    Injector,
    /// Its output capacitor sits directly at the port node; the engine owns
    /// the capacitor state and hands the node-voltage derivative back.
    ShuntCapacitor { c: f64, g: f64 },
}

/// Continuous-time realization of a resource for embedding into the
/// simulation engine. States are owned by the engine as one flat slice.
pub trait ResourceDynamics: Send {
    fn n_states(&self) -> usize;
    fn attachment(&self) -> PortAttachment;
    fn init_state(&self, x: &mut [f64]);
    /// Current injected into the port node; a function of the states only.
    fn port_current(&self, x: &[f64]) -> [f64; 3];
    /// State derivatives. `v_port` is the port node voltage (or the stiff
    /// source voltage when an external series impedance was merged at
    /// construction); `dv_port` is the node-voltage derivative, used by
    /// shunt-capacitor resources to reconstruct their branch current.
    fn derivatives(
        &self,
        t: f64,
        x: &[f64],
        v_port: &[f64; 3],
        dv_port: &[f64; 3],
        dx: &mut [f64],
    );
    /// Terminal voltage and injected current for recording.
    fn port_records(
        &self,
        t: f64,
        x: &[f64],
        v_port: &[f64; 3],
        dv_port: &[f64; 3],
    ) -> ([f64; 3], [f64; 3]);
    /// Whether the resource synchronizes to the grid (and therefore takes
    /// per-cycle updates).
    fn synchronizes(&self) -> bool {
        false
    }
    /// Per-cycle synchronization update from the fundamental
    /// positive-sequence phasor of the terminal voltage, measured over the
    /// last cycle. Returns the magnitude of the state change (settled when
    /// it vanishes).
    fn update_sync(&mut self, _pos_seq_phasor: Complex64) -> f64 {
        0.0
    }
    /// Switch the reference computation to the exact pointwise division
    /// (diagnostic; the default matches the harmonic-domain model's
    /// second-order reciprocal expansion).
    fn set_exact_reference(&mut self, _exact: bool) {}
}

/// Fast DQ synthesis matrix at angle `theta` (one `sin_cos`, no further
/// trigonometry).
fn t_abc_dq(theta: f64) -> SMatrix<f64, 3, 2> {
    const C3: f64 = -0.5;
    const S3: f64 = 0.866_025_403_784_438_6;
    let k = (2.0f64 / 3.0).sqrt();
    let (s, c) = theta.sin_cos();
    SMatrix::<f64, 3, 2>::new(
        k * c,
        -k * s,
        k * (c * C3 + s * S3),
        -k * (s * C3 - c * S3),
        k * (c * C3 - s * S3),
        -k * (s * C3 + c * S3),
    )
}

struct FormingDynamics {
    w1: f64,
    l_a: f64,
    r_a: f64,
    c_f: f64,
    g_f: f64,
    a_k: SMatrix<f64, 4, 4>,
    b_k: SMatrix<f64, 4, 6>,
    e_k: SMatrix<f64, 4, 2>,
    c_k: SMatrix<f64, 2, 4>,
    d_k: SMatrix<f64, 2, 6>,
    f_k: SMatrix<f64, 2, 2>,
    ref_dq: Vector2<f64>,
}

impl FormingDynamics {
    fn eval(
        &self,
        t: f64,
        x: &[f64],
        v: &Vector3<f64>,
        dv: &Vector3<f64>,
    ) -> (Vector3<f64>, SMatrix<f64, 4, 1>, Vector3<f64>) {
        let theta = self.w1 * t;
        let tm = t_abc_dq(theta);
        let i_a = Vector3::new(x[0], x[1], x[2]);
        let xk = SMatrix::<f64, 4, 1>::from_column_slice(&x[3..7]);
        let i_g = i_a - v * self.g_f - dv * self.c_f;
        let mut u = SMatrix::<f64, 6, 1>::zeros();
        u.fixed_rows_mut::<2>(0).copy_from(&(tm.transpose() * i_a));
        u.fixed_rows_mut::<2>(2).copy_from(&(tm.transpose() * v));
        u.fixed_rows_mut::<2>(4).copy_from(&(tm.transpose() * i_g));
        let y = self.c_k * xk + self.d_k * u + self.f_k * self.ref_dq;
        let v_act = tm * y;
        let di_a = (v_act - v - i_a * self.r_a) / self.l_a;
        let dxk = self.a_k * xk + self.b_k * u + self.e_k * self.ref_dq;
        (di_a, dxk, i_g)
    }
}

struct FollowingDynamics {
    w1: f64,
    theta0: f64,
    /// Steady DC component of the direct-axis terminal voltage, refined
    /// per cycle together with the lock angle.
    v_d0: f64,
    exact_reference: bool,
    l_a: f64,
    r_a: f64,
    c_f: f64,
    g_f: f64,
    /// Grid-side branch including any merged external series impedance.
    l_g: f64,
    r_g: f64,
    l_ext: f64,
    r_ext: f64,
    blocking: Matrix3<f64>,
    a_k: SMatrix<f64, 6, 6>,
    b_k: SMatrix<f64, 6, 8>,
    e_k: SMatrix<f64, 6, 2>,
    c_k: SMatrix<f64, 2, 6>,
    d_k: SMatrix<f64, 2, 8>,
    f_k: SMatrix<f64, 2, 2>,
    pq_eff: Vector2<f64>,
}

impl FollowingDynamics {
    #[allow(clippy::type_complexity)]
    fn eval(
        &self,
        t: f64,
        x: &[f64],
        v_src: &Vector3<f64>,
    ) -> (
        Vector3<f64>,
        Vector3<f64>,
        Vector3<f64>,
        SMatrix<f64, 6, 1>,
        Vector3<f64>,
    ) {
        let theta = self.w1 * t + self.theta0;
        let tm = t_abc_dq(theta);
        let i_a = Vector3::new(x[0], x[1], x[2]);
        let v_f = Vector3::new(x[3], x[4], x[5]);
        let i_g = Vector3::new(x[6], x[7], x[8]);
        let xk = SMatrix::<f64, 6, 1>::from_column_slice(&x[9..15]);

        let di_g = (v_f - self.blocking * v_src - i_g * self.r_g) / self.l_g;
        let v_term = v_src + i_g * self.r_ext + di_g * self.l_ext;

        let mut u = SMatrix::<f64, 8, 1>::zeros();
        u.fixed_rows_mut::<2>(0).copy_from(&(tm.transpose() * i_a));
        u.fixed_rows_mut::<2>(2).copy_from(&(tm.transpose() * v_f));
        u.fixed_rows_mut::<2>(4).copy_from(&(tm.transpose() * i_g));
        u.fixed_rows_mut::<2>(6)
            .copy_from(&(tm.transpose() * (self.blocking * v_term)));

        // Reference current: by default the second-order expansion of the
        // reciprocal around the synchronized DC voltage (the same form the
        // harmonic-domain model uses); optionally the exact pointwise
        // division. Floors only matter during start-up transients.
        let v_d = u[(6, 0)];
        let i_ref = if self.exact_reference {
            self.pq_eff / v_d.max(0.1)
        } else {
            let xi = v_d / self.v_d0.max(0.1) - 1.0;
            self.pq_eff * ((1.0 - xi + xi * xi) / self.v_d0.max(0.1))
        };

        let y = self.c_k * xk + self.d_k * u + self.f_k * i_ref;
        let v_act = tm * y;
        let di_a = (v_act - v_f - i_a * self.r_a) / self.l_a;
        let dv_f = (i_a - i_g - v_f * self.g_f) / self.c_f;
        let dxk = self.a_k * xk + self.b_k * u + self.e_k * i_ref;
        (di_a, dv_f, di_g, dxk, v_term)
    }
}

enum Inner {
    Forming(FormingDynamics),
    Following(FollowingDynamics),
}

/// Time-domain realization of one resource, shared by the network and the
/// stiff-source simulation setups.
pub struct CiderDynamics {
    inner: Inner,
}

impl CiderDynamics {
    /// Build from a per-unit specification. `ext_series = (L, R)` merges an
    /// external series impedance into the grid-side branch of a following
    /// resource (direct coupling to a stiff source); forming resources do
    /// not accept one.
    pub fn new(
        spec: &CiderSpec,
        f1_hz: f64,
        ext_series: Option<(f64, f64)>,
    ) -> Result<Self, ResourceError> {
        spec.validate()?;
        let sp = SpectralParams::new(f1_hz, 1);
        let ctrl = compose_controller_cascade(&stage_gain_sets(spec, sp));
        let w1 = sp.omega1();
        let real = |m: &crate::spectral::LtpMatrix| m.term(0).map(|x| x.re);
        let (a_k, b_k, e_k, c_k, d_k, f_k) = (
            real(&ctrl.a),
            real(&ctrl.b),
            real(&ctrl.e),
            real(&ctrl.c),
            real(&ctrl.d),
            real(&ctrl.f),
        );
        match spec.kind {
            CiderKind::Forming => {
                if ext_series.is_some() {
                    return Err(ResourceError::InvalidParameter(
                        "a forming resource does not take an external series impedance".into(),
                    ));
                }
                let (d_ref, q_ref) = forming_reference(&spec.setpoint);
                Ok(Self {
                    inner: Inner::Forming(FormingDynamics {
                        w1,
                        l_a: spec.stages[0].filter.series_value,
                        r_a: spec.stages[0].filter.loss_value,
                        c_f: spec.stages[1].filter.series_value,
                        g_f: spec.stages[1].filter.loss_value,
                        a_k: a_k.fixed_view::<4, 4>(0, 0).into_owned(),
                        b_k: b_k.fixed_view::<4, 6>(0, 0).into_owned(),
                        e_k: e_k.fixed_view::<4, 2>(0, 0).into_owned(),
                        c_k: c_k.fixed_view::<2, 4>(0, 0).into_owned(),
                        d_k: d_k.fixed_view::<2, 6>(0, 0).into_owned(),
                        f_k: f_k.fixed_view::<2, 2>(0, 0).into_owned(),
                        ref_dq: Vector2::new(d_ref, q_ref),
                    }),
                })
            }
            CiderKind::Following => {
                let (l_ext, r_ext) = ext_series.unwrap_or((0.0, 0.0));
                let (p, q) = match spec.setpoint {
                    Setpoint::Following { p, q } => (p, q),
                    _ => unreachable!("validated"),
                };
                Ok(Self {
                    inner: Inner::Following(FollowingDynamics {
                        w1,
                        theta0: 0.0,
                        v_d0: (3.0f64).sqrt(),
                        exact_reference: false,
                        l_a: spec.stages[0].filter.series_value,
                        r_a: spec.stages[0].filter.loss_value,
                        c_f: spec.stages[1].filter.series_value,
                        g_f: spec.stages[1].filter.loss_value,
                        l_g: spec.stages[2].filter.series_value + l_ext,
                        r_g: spec.stages[2].filter.loss_value + r_ext,
                        l_ext,
                        r_ext,
                        blocking: FrameCoupling::new(spec.legs).matrix,
                        a_k: a_k.fixed_view::<6, 6>(0, 0).into_owned(),
                        b_k: b_k.fixed_view::<6, 8>(0, 0).into_owned(),
                        e_k: e_k.fixed_view::<6, 2>(0, 0).into_owned(),
                        c_k: c_k.fixed_view::<2, 6>(0, 0).into_owned(),
                        d_k: d_k.fixed_view::<2, 8>(0, 0).into_owned(),
                        f_k: f_k.fixed_view::<2, 2>(0, 0).into_owned(),
                        pq_eff: Vector2::new(3.0 * p, 3.0 * q),
                    }),
                })
            }
        }
    }
}

impl ResourceDynamics for CiderDynamics {
    fn n_states(&self) -> usize {
        match &self.inner {
            Inner::Forming(_) => 7,
            Inner::Following(_) => 15,
        }
    }

    fn attachment(&self) -> PortAttachment {
        match &self.inner {
            Inner::Forming(f) => PortAttachment::ShuntCapacitor { c: f.c_f, g: f.g_f },
            Inner::Following(_) => PortAttachment::Injector,
        }
    }

    fn init_state(&self, x: &mut [f64]) {
        x.fill(0.0);
    }

    fn port_current(&self, x: &[f64]) -> [f64; 3] {
        match &self.inner {
            Inner::Forming(_) => [x[0], x[1], x[2]],
            Inner::Following(f) => {
                let i_g = f.blocking * Vector3::new(x[6], x[7], x[8]);
                [i_g[0], i_g[1], i_g[2]]
            }
        }
    }

    fn derivatives(
        &self,
        t: f64,
        x: &[f64],
        v_port: &[f64; 3],
        dv_port: &[f64; 3],
        dx: &mut [f64],
    ) {
        let v = Vector3::from_column_slice(v_port);
        match &self.inner {
            Inner::Forming(f) => {
                let dv = Vector3::from_column_slice(dv_port);
                let (di_a, dxk, _) = f.eval(t, x, &v, &dv);
                dx[..3].copy_from_slice(di_a.as_slice());
                dx[3..7].copy_from_slice(dxk.as_slice());
            }
            Inner::Following(f) => {
                let (di_a, dv_f, di_g, dxk, _) = f.eval(t, x, &v);
                dx[..3].copy_from_slice(di_a.as_slice());
                dx[3..6].copy_from_slice(dv_f.as_slice());
                dx[6..9].copy_from_slice(di_g.as_slice());
                dx[9..15].copy_from_slice(dxk.as_slice());
            }
        }
    }

    fn port_records(
        &self,
        t: f64,
        x: &[f64],
        v_port: &[f64; 3],
        dv_port: &[f64; 3],
    ) -> ([f64; 3], [f64; 3]) {
        let v = Vector3::from_column_slice(v_port);
        match &self.inner {
            Inner::Forming(f) => {
                let dv = Vector3::from_column_slice(dv_port);
                let (_, _, i_g) = f.eval(t, x, &v, &dv);
                (*v_port, [i_g[0], i_g[1], i_g[2]])
            }
            Inner::Following(f) => {
                let (_, _, _, _, v_term) = f.eval(t, x, &v);
                let i = self.port_current(x);
                ([v_term[0], v_term[1], v_term[2]], i)
            }
        }
    }

    fn synchronizes(&self) -> bool {
        matches!(self.inner, Inner::Following(_))
    }

    fn update_sync(&mut self, pos: Complex64) -> f64 {
        match &mut self.inner {
            Inner::Forming(_) => 0.0,
            Inner::Following(f) => {
                if pos.norm() < 1e-9 {
                    return f64::INFINITY;
                }
                let theta_new = pos.arg();
                // DC of the direct-axis voltage implied by the locked
                // fundamental positive-sequence phasor.
                let v_d0_new = (6.0f64).sqrt() * pos.norm();
                let mut dtheta = (theta_new - f.theta0) % std::f64::consts::TAU;
                if dtheta > std::f64::consts::PI {
                    dtheta -= std::f64::consts::TAU;
                } else if dtheta < -std::f64::consts::PI {
                    dtheta += std::f64::consts::TAU;
                }
                let dv = (v_d0_new - f.v_d0).abs() / v_d0_new.max(1e-9);
                f.theta0 = theta_new;
                f.v_d0 = v_d0_new;
                dtheta.abs().max(dv)
            }
        }
    }

    fn set_exact_reference(&mut self, exact: bool) {
        if let Inner::Following(f) = &mut self.inner {
            f.exact_reference = exact;
        }
    }
}
