use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;

use crate::components::FrameCoupling;
use crate::spectral::{
    dq_transform_coefficients, sequence_decompose, BlockBandedLu, HarmonicSpectrum, LtpMatrix,
    PolyphaseSpectrum, SpectralParams,
};

use super::registry::{HarmonicResponse, PortRole};
use super::{
    build_following_statespace, build_forming_statespace, closed_loop_dq_matrix,
    forming_reference, reciprocal_coefficients, CiderKind, CiderSpec,
    ResourceError, Setpoint,
};

/// Result of one harmonic-response evaluation.
#[derive(Debug, Clone)]
pub struct ResponseOutput {
    /// Port quantity in the grid frame: injected current for a following
    /// resource, terminal voltage for a forming resource.
    pub port: PolyphaseSpectrum,
    /// Reference angle used for the evaluation.
    pub lock_angle: f64,
}

/// Harmonic-domain closed loop of one resource, lifted over the order set.
///
/// The hardware block (phase frame), control block (DQ frame), and the
/// transform pair between them are composed into one LTP system whose
/// steady state satisfies `(N - A_cl) x = E_dist w + E_ref r`, with `N` the
/// harmonic derivative operator. The composed coefficients have Fourier
/// orders up to 2, so the lifted operator is block-banded and is factored
/// once at construction.
///
/// The reference angle enters every transform coefficient as `e^{j h
/// theta0}`, which lifts to a block-diagonal phase similarity. Evaluations
/// therefore rotate the input spectra into the `theta0 = 0` frame, run the
/// cached factorization, and rotate the outputs back; no refactorization is
/// needed when the synchronization angle moves between solver iterations.
pub struct LiftedCider {
    /// Order set exchanged with the grid.
    sp: SpectralParams,
    /// Extended internal order set: the closed loop is solved with a guard
    /// band above the exchanged orders so that harmonic mixing through the
    /// transforms and the nonlinear reference is captured up to the band
    /// edge instead of being truncated exactly at it.
    sp_int: SpectralParams,
    kind: CiderKind,
    /// Composite state dimension (hardware + control).
    n: usize,
    n_xp: usize,
    lu: BlockBandedLu,
    /// Composite grid-disturbance input, `n x 3`, grid frame.
    e_dist: LtpMatrix,
    /// Composite reference input, `n x 2`.
    e_ref: LtpMatrix,
    /// First state row of the port quantity.
    out_offset: usize,
    /// Frame coupling applied to the port states on the way out.
    out_frame: Matrix3<f64>,
    /// Measurement chain from the grid-frame port voltage to the DQ pair.
    dq_meas: LtpMatrix,
    /// Output map for the actuator voltage diagnostics: y_kappa expressed in
    /// terms of (x, w_grid, w_ref).
    y_from_x: LtpMatrix,
    y_from_w: LtpMatrix,
    y_from_r: LtpMatrix,
    /// Following setpoint in DQ-consistent per-unit power.
    pq_eff: (f64, f64),
    /// Diagnostic: resolve the reference reciprocal pointwise instead of
    /// through the second-order expansion (quantifies the expansion error).
    exact_reciprocal: bool,
    /// Forming DC reference.
    ref_dc: (f64, f64),
}

/// Band-limited Fourier coefficients of the exact pointwise reciprocal,
/// via synthesis and quadrature on an oversampled grid.
fn pointwise_reciprocal(v: &HarmonicSpectrum) -> Result<HarmonicSpectrum, ResourceError> {
    let params = v.params();
    if v.get(0).re.abs() < 1e-9 {
        return Err(ResourceError::SingularOperatingPoint(
            "reciprocal requires a nonzero DC component".into(),
        ));
    }
    let n = 8 * params.len();
    let dt = params.period() / n as f64;
    let mut out = HarmonicSpectrum::zero(params);
    let w1 = params.omega1();
    for h in 0..=params.h_max() {
        let mut acc = Complex64::ZERO;
        for k in 0..n {
            let t = k as f64 * dt;
            let val = 1.0 / v.synthesize(t);
            acc += Complex64::from_polar(val, -(h as f64) * w1 * t);
        }
        out.set_conjugate_pair(h, acc / n as f64).unwrap();
    }
    Ok(out)
}

fn block2x2(
    a11: &LtpMatrix,
    a12: &LtpMatrix,
    a21: &LtpMatrix,
    a22: &LtpMatrix,
) -> LtpMatrix {
    let (r1, r2) = (a11.rows(), a21.rows());
    let (c1, c2) = (a11.cols(), a12.cols());
    assert_eq!(a12.rows(), r1);
    assert_eq!(a22.rows(), r2);
    assert_eq!(a21.cols(), c1);
    assert_eq!(a22.cols(), c2);
    let mut orders: Vec<i32> = Vec::new();
    for m in [a11, a12, a21, a22] {
        orders.extend(m.stored_orders());
    }
    orders.sort_unstable();
    orders.dedup();
    let terms = orders.into_iter().map(|h| {
        let mut blk = DMatrix::zeros(r1 + r2, c1 + c2);
        blk.view_mut((0, 0), (r1, c1)).copy_from(&a11.term(h));
        blk.view_mut((0, c1), (r1, c2)).copy_from(&a12.term(h));
        blk.view_mut((r1, 0), (r2, c1)).copy_from(&a21.term(h));
        blk.view_mut((r1, c1), (r2, c2)).copy_from(&a22.term(h));
        (h, blk)
    });
    LtpMatrix::from_terms(r1 + r2, c1 + c2, terms).expect("blocks share symmetry")
}

fn stack2(top: &LtpMatrix, bottom: &LtpMatrix) -> LtpMatrix {
    let zero_tr = LtpMatrix::zero(top.rows(), 0);
    let _ = zero_tr;
    let (r1, r2) = (top.rows(), bottom.rows());
    let c = top.cols();
    assert_eq!(bottom.cols(), c);
    let mut orders: Vec<i32> = top.stored_orders().chain(bottom.stored_orders()).collect();
    orders.sort_unstable();
    orders.dedup();
    let terms = orders.into_iter().map(|h| {
        let mut blk = DMatrix::zeros(r1 + r2, c);
        blk.view_mut((0, 0), (r1, c)).copy_from(&top.term(h));
        blk.view_mut((r1, 0), (r2, c)).copy_from(&bottom.term(h));
        (h, blk)
    });
    LtpMatrix::from_terms(r1 + r2, c, terms).expect("blocks share symmetry")
}

impl LiftedCider {
    /// Build and factor the lifted closed loop of `spec` (given in per-unit)
    /// over the order set `sp`, with the default internal guard band.
    /// Fails if the closed loop is unstable or a lifted diagonal block is
    /// singular (a resonance at that order).
    pub fn new(spec: &CiderSpec, sp: SpectralParams) -> Result<Self, ResourceError> {
        Self::with_guard(spec, sp, 6)
    }

    /// Build with an explicit internal guard band of `guard` orders above
    /// `h_max`.
    pub fn with_guard(spec: &CiderSpec, sp: SpectralParams, guard: u32) -> Result<Self, ResourceError> {
        Self::build(spec, sp, guard, false)
    }

    /// Diagnostic constructor: evaluate the reference reciprocal pointwise
    /// on a time grid instead of via the second-order expansion. Used to
    /// isolate how much of the mismatch against the time-domain reference
    /// stems from the expansion.
    pub fn with_exact_reciprocal(
        spec: &CiderSpec,
        sp: SpectralParams,
        guard: u32,
    ) -> Result<Self, ResourceError> {
        Self::build(spec, sp, guard, true)
    }

    fn build(
        spec: &CiderSpec,
        sp: SpectralParams,
        guard: u32,
        exact_reciprocal: bool,
    ) -> Result<Self, ResourceError> {
        spec.validate()?;
        let sp_int = SpectralParams::new(sp.f1_hz(), sp.h_max() + guard);
        let (hw, ctrl) = match spec.kind {
            CiderKind::Forming => build_forming_statespace(spec, sp_int)?,
            CiderKind::Following => build_following_statespace(spec, sp_int)?,
        };

        // Steady state presumes asymptotic stability of the closed loop.
        let cl = closed_loop_dq_matrix(spec, sp_int);
        let max_re = cl
            .complex_eigenvalues()
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_re >= 0.0 {
            return Err(ResourceError::Unstable { re: max_re });
        }

        let coupling = FrameCoupling::new(spec.legs);
        let m_in = LtpMatrix::from_constant_real(&DMatrix::from_fn(3, 3, |r, c| {
            coupling.matrix[(r, c)]
        }));

        let t = dq_transform_coefficients(0.0);
        let n_xp = hw.a.rows();
        let n_xk = ctrl.a.rows();
        let n_channels = hw.c.rows() / 3;
        let t_kp_all = t.dq_from_abc.block_diag_replicate(n_channels);

        // Fold the frame coupling into the hardware disturbance inputs.
        let e_p = hw.e.mul(&m_in);
        let f_p = hw.f.mul(&m_in);

        let b_pk = hw.b.mul(&t.abc_from_dq);
        let dk_tkp = ctrl.d.mul(&t_kp_all);
        let bk_tkp = ctrl.b.mul(&t_kp_all);

        let a11 = hw.a.add(&b_pk.mul(&dk_tkp).mul(&hw.c));
        let a12 = b_pk.mul(&ctrl.c);
        let a21 = bk_tkp.mul(&hw.c);
        let a_cl = block2x2(&a11, &a12, &a21, &ctrl.a);

        let e1 = e_p.add(&b_pk.mul(&dk_tkp).mul(&f_p));
        let e2 = bk_tkp.mul(&f_p);
        let e_dist = stack2(&e1, &e2);

        let r1 = b_pk.mul(&ctrl.f);
        let e_ref = stack2(&r1, &ctrl.e);

        // y_kappa = C x_k + D T (C_p x_p + F_p w) + F r, assembled over the
        // composite state for diagnostics.
        let y_from_x = {
            let left = dk_tkp.mul(&hw.c);
            let mut orders: Vec<i32> = left.stored_orders().chain(ctrl.c.stored_orders()).collect();
            orders.sort_unstable();
            orders.dedup();
            let terms = orders.into_iter().map(|h| {
                let mut blk = DMatrix::zeros(2, n_xp + n_xk);
                blk.view_mut((0, 0), (2, n_xp)).copy_from(&left.term(h));
                blk.view_mut((0, n_xp), (2, n_xk)).copy_from(&ctrl.c.term(h));
                (h, blk)
            });
            LtpMatrix::from_terms(2, n_xp + n_xk, terms).expect("symmetry")
        };
        let y_from_w = dk_tkp.mul(&f_p);
        let y_from_r = ctrl.f.clone();

        let band = a_cl.band().max(1) as usize;
        let n = n_xp + n_xk;
        let w1 = sp_int.omega1();
        let lu = BlockBandedLu::factor(sp_int.len(), n, band, |i, j| {
            let h = sp_int.order_at(i) - sp_int.order_at(j);
            if h.abs() > a_cl.band() && i != j {
                return None;
            }
            let mut blk = a_cl.term(h).map(|x| -x);
            if i == j {
                let jw = Complex64::new(0.0, sp_int.order_at(i) as f64 * w1);
                for k in 0..n {
                    blk[(k, k)] += jw;
                }
            }
            Some(blk)
        })
        .map_err(|idx| ResourceError::ResonantOrder {
            order: sp_int.order_at(idx),
        })?;

        let (out_offset, out_frame) = match spec.kind {
            CiderKind::Forming => (3, Matrix3::identity()),
            CiderKind::Following => (6, coupling.matrix),
        };

        let dq_meas = t.dq_from_abc.mul(&m_in);

        let pq_eff = match spec.setpoint {
            Setpoint::Following { p, q } => (3.0 * p, 3.0 * q),
            _ => (0.0, 0.0),
        };
        let ref_dc = match spec.setpoint {
            Setpoint::Forming { .. } => forming_reference(&spec.setpoint),
            _ => (0.0, 0.0),
        };

        Ok(Self {
            sp,
            sp_int,
            exact_reciprocal,
            kind: spec.kind,
            n,
            n_xp,
            lu,
            e_dist,
            e_ref,
            out_offset,
            out_frame,
            dq_meas,
            y_from_x,
            y_from_w,
            y_from_r,
            pq_eff,
            ref_dc,
        })
    }

    pub fn kind(&self) -> CiderKind {
        self.kind
    }

    /// Rotated input coefficients as one flat per-order slice, zero-padded
    /// above the exchanged band.
    fn input_flat(&self, input: &PolyphaseSpectrum, theta0: f64) -> Vec<Complex64> {
        let len = self.sp_int.len();
        let mut w = vec![Complex64::ZERO; 3 * len];
        for (i, h) in self.sp_int.orders().enumerate() {
            if h.abs() > self.sp.h_max() as i32 {
                continue;
            }
            let rot = Complex64::from_polar(1.0, -(h as f64) * theta0);
            let v = input.at_order(h);
            for k in 0..3 {
                w[3 * i + k] = v[k] * rot;
            }
        }
        w
    }

    fn reference_flat(&self, w_flat: &[Complex64]) -> Result<Vec<Complex64>, ResourceError> {
        let len = self.sp_int.len();
        let mut r = vec![Complex64::ZERO; 2 * len];
        match self.kind {
            CiderKind::Forming => {
                let dc = self.sp_int.index_of(0).unwrap();
                r[2 * dc] = Complex64::new(self.ref_dc.0, 0.0);
                r[2 * dc + 1] = Complex64::new(self.ref_dc.1, 0.0);
            }
            CiderKind::Following => {
                let mut dq = vec![Complex64::ZERO; 2 * len];
                self.dq_meas.apply_lifted_flat(w_flat, &mut dq, len);
                let mut vd = HarmonicSpectrum::zero(self.sp_int);
                for (i, h) in self.sp_int.orders().enumerate() {
                    vd.set(h, dq[2 * i]).unwrap();
                }
                let recip = if self.exact_reciprocal {
                    pointwise_reciprocal(&vd)?
                } else {
                    reciprocal_coefficients(&vd)?
                };
                for (i, h) in self.sp_int.orders().enumerate() {
                    let psi = recip.get(h);
                    r[2 * i] = psi * self.pq_eff.0;
                    r[2 * i + 1] = psi * self.pq_eff.1;
                }
            }
        }
        Ok(r)
    }

    fn solve_states(&self, w_flat: &[Complex64], r_flat: &[Complex64]) -> DVector<Complex64> {
        let len = self.sp_int.len();
        let mut rhs = DVector::zeros(self.n * len);
        self.e_dist.apply_lifted_flat(w_flat, rhs.as_mut_slice(), len);
        self.e_ref.apply_lifted_flat(r_flat, rhs.as_mut_slice(), len);
        self.lu.solve_in_place(&mut rhs);
        rhs
    }

    /// Lock angle implied by the input spectrum: the phase of the
    /// fundamental positive-sequence component for a following resource,
    /// zero (the unit's own clock) for a forming one.
    pub fn lock_angle_for(&self, input: &PolyphaseSpectrum) -> Result<f64, ResourceError> {
        match self.kind {
            CiderKind::Forming => Ok(0.0),
            CiderKind::Following => {
                let (pos, _, _) = sequence_decompose(input.at_order(1));
                if pos.norm() < 1e-12 {
                    return Err(ResourceError::SingularOperatingPoint(
                        "no fundamental positive-sequence voltage to synchronize to".into(),
                    ));
                }
                Ok(pos.arg())
            }
        }
    }

    /// Evaluate the closed-loop steady-state response to the grid-side
    /// input spectrum (port voltage for following, injected current for
    /// forming units) and return the complementary port quantity.
    pub fn respond(&self, input: &PolyphaseSpectrum) -> Result<ResponseOutput, ResourceError> {
        let theta0 = self.lock_angle_for(input)?;
        let w_flat = self.input_flat(input, theta0);
        let r_flat = self.reference_flat(&w_flat)?;
        let x = self.solve_states(&w_flat, &r_flat);

        let mut port = PolyphaseSpectrum::zero(self.sp);
        for h in self.sp.orders() {
            let i = self.sp_int.index_of(h).unwrap();
            let base = i * self.n + self.out_offset;
            let sel = nalgebra::Vector3::new(x[base], x[base + 1], x[base + 2]);
            let rot = Complex64::from_polar(1.0, h as f64 * theta0);
            let mapped = self.out_frame.map(|v| Complex64::new(v, 0.0)) * sel;
            port.set_order(h, [mapped[0] * rot, mapped[1] * rot, mapped[2] * rot])
                .unwrap();
        }
        Ok(ResponseOutput {
            port,
            lock_angle: theta0,
        })
    }

    /// Like [`respond`](Self::respond), additionally returning internal
    /// spectra: the actuator voltage and every hardware state, for
    /// diagnostics.
    pub fn respond_with_internals(
        &self,
        input: &PolyphaseSpectrum,
    ) -> Result<(ResponseOutput, Vec<PolyphaseSpectrum>, PolyphaseSpectrum), ResourceError> {
        let theta0 = self.lock_angle_for(input)?;
        let w_flat = self.input_flat(input, theta0);
        let r_flat = self.reference_flat(&w_flat)?;
        let x = self.solve_states(&w_flat, &r_flat);

        let w_blocks: Vec<DMatrix<Complex64>> = (0..self.sp_int.len())
            .map(|i| DMatrix::from_fn(3, 1, |r, _| w_flat[3 * i + r]))
            .collect();
        let r_blocks: Vec<DMatrix<Complex64>> = (0..self.sp_int.len())
            .map(|i| DMatrix::from_fn(2, 1, |r, _| r_flat[2 * i + r]))
            .collect();
        let x_blocks: Vec<DMatrix<Complex64>> = (0..self.sp_int.len())
            .map(|i| DMatrix::from_fn(self.n, 1, |r, _| x[i * self.n + r]))
            .collect();

        let rotate = |blocks: &[DMatrix<Complex64>], row0: usize| {
            let mut ps = PolyphaseSpectrum::zero(self.sp);
            for h in self.sp.orders() {
                let i = self.sp_int.index_of(h).unwrap();
                let rot = Complex64::from_polar(1.0, h as f64 * theta0);
                ps.set_order(
                    h,
                    [
                        blocks[i][(row0, 0)] * rot,
                        blocks[i][(row0 + 1, 0)] * rot,
                        blocks[i][(row0 + 2, 0)] * rot,
                    ],
                )
                .unwrap();
            }
            ps
        };

        // Hardware states, one polyphase spectrum per filter stage.
        let n_stages = self.n_xp / 3;
        let states: Vec<PolyphaseSpectrum> =
            (0..n_stages).map(|s| rotate(&x_blocks, 3 * s)).collect();

        // Actuator voltage: V_a = T_abc_dq * y_kappa.
        let yk_x = self.y_from_x.apply_lifted(&x_blocks);
        let yk_w = self.y_from_w.apply_lifted(&w_blocks);
        let yk_r = self.y_from_r.apply_lifted(&r_blocks);
        let yk: Vec<DMatrix<Complex64>> = (0..self.sp.len())
            .map(|i| &yk_x[i] + &yk_w[i] + &yk_r[i])
            .collect();
        let t = dq_transform_coefficients(0.0);
        let va_blocks = t.abc_from_dq.apply_lifted(&yk);
        let v_act = rotate(&va_blocks, 0);

        let mut port = PolyphaseSpectrum::zero(self.sp);
        for h in self.sp.orders() {
            let i = self.sp_int.index_of(h).unwrap();
            let rot = Complex64::from_polar(1.0, h as f64 * theta0);
            let base = self.out_offset;
            let sel = nalgebra::Vector3::new(
                x_blocks[i][(base, 0)],
                x_blocks[i][(base + 1, 0)],
                x_blocks[i][(base + 2, 0)],
            );
            let mapped = self.out_frame.map(|v| Complex64::new(v, 0.0)) * sel;
            port.set_order(h, [mapped[0] * rot, mapped[1] * rot, mapped[2] * rot])
                .unwrap();
        }
        Ok((
            ResponseOutput {
                port,
                lock_angle: theta0,
            },
            states,
            v_act,
        ))
    }
}

#[cfg(test)]
mod debug_tests {
    use super::*;
    use crate::pu::PerUnit;

    #[test]
    fn banded_solve_matches_dense_on_forming_operator() {
        let spec = CiderSpec::forming_100kva(241.5, 50.0).to_per_unit(&PerUnit::new(230.0, 10e3));
        let sp = SpectralParams::new(50.0, 5);
        let lifted = LiftedCider::with_guard(&spec, sp, 0).unwrap();

        // Rebuild the dense operator the same way the constructor does.
        let (hw, ctrl) = build_forming_statespace(&spec, sp).unwrap();
        let t = dq_transform_coefficients(0.0);
        let n_channels = hw.c.rows() / 3;
        let t_kp_all = t.dq_from_abc.block_diag_replicate(n_channels);
        let b_pk = hw.b.mul(&t.abc_from_dq);
        let dk_tkp = ctrl.d.mul(&t_kp_all);
        let bk_tkp = ctrl.b.mul(&t_kp_all);
        let a11 = hw.a.add(&b_pk.mul(&dk_tkp).mul(&hw.c));
        let a12 = b_pk.mul(&ctrl.c);
        let a21 = bk_tkp.mul(&hw.c);
        let a_cl = block2x2(&a11, &a12, &a21, &ctrl.a);
        let n = lifted.n;
        let len = sp.len();
        let w1 = sp.omega1();
        let mut dense = DMatrix::<Complex64>::zeros(n * len, n * len);
        for i in 0..len {
            for j in 0..len {
                let h = sp.order_at(i) - sp.order_at(j);
                let mut blk = a_cl.term(h).map(|x| -x);
                if i == j {
                    let jw = Complex64::new(0.0, sp.order_at(i) as f64 * w1);
                    for k in 0..n {
                        blk[(k, k)] += jw;
                    }
                }
                dense.view_mut((i * n, j * n), (n, n)).copy_from(&blk);
            }
        }
        let svd_min = dense.clone().svd(false, false).singular_values.min();
        println!("dense operator min singular value: {svd_min:.3e}");

        let rhs = DVector::from_fn(n * len, |k, _| {
            Complex64::new((k % 7) as f64 * 0.1 - 0.3, (k % 5) as f64 * 0.05)
        });
        let x_banded = lifted.lu.solve(&rhs);
        let x_dense = dense.clone().lu().solve(&rhs).unwrap();
        let resid_banded = (&dense * &x_banded - &rhs).norm() / rhs.norm();
        let resid_dense = (&dense * &x_dense - &rhs).norm() / rhs.norm();
        println!("banded residual {resid_banded:.3e}, dense residual {resid_dense:.3e}");
        println!(
            "banded vs dense diff {:.3e} (norms {:.3e} / {:.3e})",
            (&x_banded - &x_dense).norm(),
            x_banded.norm(),
            x_dense.norm()
        );
        assert!(resid_banded < 1e-8);
    }
}

impl HarmonicResponse for LiftedCider {
    fn params(&self) -> SpectralParams {
        self.sp
    }

    fn role(&self) -> PortRole {
        match self.kind {
            CiderKind::Forming => PortRole::VoltageFormer,
            CiderKind::Following => PortRole::CurrentInjector,
        }
    }

    fn respond(&self, input: &PolyphaseSpectrum) -> Result<PolyphaseSpectrum, ResourceError> {
        LiftedCider::respond(self, input).map(|r| r.port)
    }

    /// Batched central differences: the perturbed right-hand sides of all
    /// columns share one multi-system banded solve. Numerically identical
    /// to the one-at-a-time differences.
    fn port_jacobian_fd(
        &self,
        input: &PolyphaseSpectrum,
        fd_step: f64,
    ) -> Result<DMatrix<f64>, ResourceError> {
        let sp = self.sp;
        let stride = sp.h_max() as usize * 6;
        let len = self.sp_int.len();
        let n_sys = self.n * len;

        let mut base = vec![0.0; stride];
        crate::solver::encode_port_slice(sp, input, &mut base);

        // Assemble both perturbed right-hand sides per column.
        let n_rhs = 2 * stride;
        let mut rhs = DMatrix::zeros(n_rhs, n_sys);
        let mut theta = vec![0.0; n_rhs];
        let mut work = base.clone();
        for c in 0..stride {
            for (side, sign) in [(0usize, 1.0f64), (1, -1.0)] {
                work[c] = base[c] + sign * fd_step;
                let ps = crate::solver::decode_port_spectrum(sp, &work);
                let theta0 = self.lock_angle_for(&ps)?;
                let w_flat = self.input_flat(&ps, theta0);
                let r_flat = self.reference_flat(&w_flat)?;
                let k = 2 * c + side;
                theta[k] = theta0;
                let mut row = vec![Complex64::ZERO; n_sys];
                self.e_dist.apply_lifted_flat(&w_flat, &mut row, len);
                self.e_ref.apply_lifted_flat(&r_flat, &mut row, len);
                for (i, v) in row.into_iter().enumerate() {
                    rhs[(k, i)] = v;
                }
            }
            work[c] = base[c];
        }
        self.lu.solve_multi_in_place(&mut rhs);

        // Extract, rotate back, and difference.
        let out_frame = self.out_frame.map(|v| Complex64::new(v, 0.0));
        let mut jac = DMatrix::zeros(stride, stride);
        let mut col = [vec![0.0; stride], vec![0.0; stride]];
        for c in 0..stride {
            for side in 0..2 {
                let k = 2 * c + side;
                let mut ps = PolyphaseSpectrum::zero(sp);
                for h in 1..=sp.h_max() {
                    let i = self.sp_int.index_of(h as i32).unwrap();
                    let b = i * self.n + self.out_offset;
                    let sel = nalgebra::Vector3::new(rhs[(k, b)], rhs[(k, b + 1)], rhs[(k, b + 2)]);
                    let rot = Complex64::from_polar(1.0, h as f64 * theta[k]);
                    let mapped = out_frame * sel;
                    ps.set_order_pair(h, [mapped[0] * rot, mapped[1] * rot, mapped[2] * rot])
                        .unwrap();
                }
                crate::solver::encode_port_slice(sp, &ps, &mut col[side]);
            }
            for r in 0..stride {
                jac[(r, c)] = (col[0][r] - col[1][r]) / (2.0 * fd_step);
            }
        }
        Ok(jac)
    }
}
