use num_complex::Complex64;

use crate::spectral::HarmonicSpectrum;

use super::{ResourceError, Setpoint};

/// Fourier coefficients of the reciprocal `1/v(t)` of a real signal with a
/// dominant DC component, via a second-order expansion of the reciprocal in
/// the relative ripple `xi(t) = (v(t) - V_0)/V_0`:
///
/// `1/v ~ (1 - xi + xi^2) / V_0`
///
/// which gives, per order,
///
/// `R_0 = 1/V_0 + sum_{h != 0} |V_h|^2 / V_0^3`
/// `R_h = -V_h / V_0^2 + sum_{i != 0, i != h} V_i V_{h-i} / V_0^3`.
///
/// The convolution excludes `i = h` because the ripple has no DC term. The
/// result is exact to second order in the ripple; the leading error is the
/// cubic remainder of the expansion.
pub fn reciprocal_coefficients(v: &HarmonicSpectrum) -> Result<HarmonicSpectrum, ResourceError> {
    let v0 = v.get(0);
    if v0.norm() < 1e-9 {
        return Err(ResourceError::SingularOperatingPoint(
            "reciprocal expansion requires a nonzero DC component".into(),
        ));
    }
    let v0 = v0.re;
    let params = v.params();
    let h_max = params.h_max() as i32;
    let inv0 = 1.0 / v0;
    let inv2 = inv0 * inv0;
    let inv3 = inv2 * inv0;
    let mut out = HarmonicSpectrum::zero(params);

    let mut r0 = Complex64::new(inv0, 0.0);
    for i in params.orders() {
        if i != 0 {
            r0 += Complex64::new(v.get(i).norm_sqr() * inv3, 0.0);
        }
    }
    out.set(0, r0).unwrap();

    for h in params.orders() {
        if h == 0 {
            continue;
        }
        let mut rh = -v.get(h) * inv2;
        for i in params.orders() {
            if i == 0 || i == h {
                continue;
            }
            let k = h - i;
            if k != 0 && k.abs() <= h_max {
                rh += v.get(i) * v.get(k) * inv3;
            }
        }
        out.set(h, rh).unwrap();
    }
    Ok(out)
}

/// DQ reference-current spectrum of a following resource: per order, the
/// direct channel carries `R_h * p` and the quadrature channel `R_h * q`,
/// with `R` the reciprocal spectrum of the measured direct-axis voltage and
/// `(p, q)` the power setpoint expressed in DQ-consistent units.
pub fn following_reference(
    recip: &HarmonicSpectrum,
    p: f64,
    q: f64,
) -> (HarmonicSpectrum, HarmonicSpectrum) {
    (recip.scaled(p), recip.scaled(q))
}

/// DQ reference-voltage pair of a forming resource: a pure DC reference
/// `(sqrt(3/2) * v_peak, 0)` in the DQ frame, where `v_peak` is the peak of
/// the per-phase voltage setpoint.
pub fn forming_reference(setpoint: &Setpoint) -> (f64, f64) {
    match *setpoint {
        Setpoint::Forming { v_rms, .. } => {
            let v_peak = v_rms * std::f64::consts::SQRT_2;
            ((1.5f64).sqrt() * v_peak, 0.0)
        }
        Setpoint::Following { .. } => panic!("forming reference requires a forming setpoint"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralParams;

    fn sp() -> SpectralParams {
        SpectralParams::new(50.0, 25)
    }

    #[test]
    fn reciprocal_of_pure_dc() {
        let v = HarmonicSpectrum::from_positive_orders(sp(), [(0, Complex64::new(2.0, 0.0))])
            .unwrap();
        let r = reciprocal_coefficients(&v).unwrap();
        assert!((r.get(0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        for h in 1..=25 {
            assert_eq!(r.get(h).norm(), 0.0);
        }
    }

    #[test]
    fn reciprocal_hand_expansion() {
        // V_0 = 1 with a real ripple pair at order 6 of 0.03.
        let v = HarmonicSpectrum::from_positive_orders(
            sp(),
            [
                (0, Complex64::new(1.0, 0.0)),
                (6, Complex64::new(0.03, 0.0)),
            ],
        )
        .unwrap();
        let r = reciprocal_coefficients(&v).unwrap();
        assert!((r.get(0).re - 1.0018).abs() < 1e-12);
        assert!((r.get(6).re - (-0.03)).abs() < 1e-12);
        assert!((r.get(-6).re - (-0.03)).abs() < 1e-12);
        assert!((r.get(12).re - 0.0009).abs() < 1e-12);
        assert!(r.get(3).norm() < 1e-15);
    }

    #[test]
    fn reciprocal_tracks_pointwise_inverse_within_cubic_remainder() {
        let v = HarmonicSpectrum::from_positive_orders(
            sp(),
            [
                (0, Complex64::new(1.0, 0.0)),
                (6, Complex64::new(0.05, 0.0)),
            ],
        )
        .unwrap();
        let r = reciprocal_coefficients(&v).unwrap();
        // Total ripple magnitude: 2 * 0.05 = 0.1; the third-order remainder
        // of the expansion is bounded by ~ xi^3 / (1 - xi).
        let bound = 3.0 * 0.1f64.powi(3);
        let mut worst: f64 = 0.0;
        for k in 0..400 {
            let t = k as f64 * 1e-4 / 2.0;
            let exact = 1.0 / v.synthesize(t);
            let approx = r.synthesize(t);
            worst = worst.max(((approx - exact) / exact).abs());
        }
        assert!(worst < bound, "relative error {worst:.2e} exceeds {bound:.2e}");
    }

    #[test]
    fn reciprocal_requires_dc() {
        let v = HarmonicSpectrum::from_positive_orders(sp(), [(6, Complex64::new(0.3, 0.0))])
            .unwrap();
        assert!(reciprocal_coefficients(&v).is_err());
    }

    #[test]
    fn following_reference_constant_voltage() {
        let v = HarmonicSpectrum::from_positive_orders(sp(), [(0, Complex64::new(2.5, 0.0))])
            .unwrap();
        let r = reciprocal_coefficients(&v).unwrap();
        let (d, q) = following_reference(&r, 50e3, 16.4e3);
        assert!((d.get(0).re - 50e3 / 2.5).abs() < 1e-9);
        assert!((q.get(0).re - 16.4e3 / 2.5).abs() < 1e-9);
        assert_eq!(d.get(5).norm(), 0.0);
    }

    #[test]
    fn forming_reference_values() {
        let (d, q) = forming_reference(&Setpoint::Forming {
            v_rms: 241.5,
            f_hz: 50.0,
        });
        let peak = 241.5 * std::f64::consts::SQRT_2;
        assert!((d - (1.5f64).sqrt() * peak).abs() < 1e-9);
        assert_eq!(q, 0.0);
        let (d0, _) = forming_reference(&Setpoint::Forming {
            v_rms: 0.0,
            f_hz: 50.0,
        });
        assert_eq!(d0, 0.0);
    }
}
