use nalgebra::{DMatrix, Matrix3x2};
use num_complex::Complex64;

use super::{fortescue::alpha, LtpMatrix};

/// The rotating-frame transform pair between phase (ABC) coordinates and
/// direct-quadrature (DQ) coordinates for reference angle
/// `theta(t) = w1 t + theta0`.
///
/// `abc_from_dq` is the 3x2 synthesis matrix and `dq_from_abc` its
/// transpose; both carry Fourier content only at orders +-1, which is what
/// couples neighboring harmonic orders once lifted.
#[derive(Debug, Clone)]
pub struct DqTransform {
    /// 3x2, maps DQ vectors into phase coordinates.
    pub abc_from_dq: LtpMatrix,
    /// 2x3, maps phase vectors into DQ coordinates.
    pub dq_from_abc: LtpMatrix,
}

/// Fourier coefficients of the DQ transform pair at reference offset
/// `theta0`. The order +1 coefficient of the synthesis direction is
/// `sqrt(2/3) e^{j theta0} [[1/2, -1/(2j)]; [a*/2, -a*/(2j)]; [a/2, -a/(2j)]]`
/// with `a = exp(j 2 pi/3)`; the order -1 coefficient is its conjugate.
pub fn dq_transform_coefficients(theta0: f64) -> DqTransform {
    let a = alpha();
    let scale = (2.0f64 / 3.0).sqrt() * Complex64::from_polar(0.5, theta0);
    // Columns: cos channel -> 1/2-type entries, -sin channel -> -1/(2j) = j/2.
    let half_j = Complex64::new(0.0, 1.0);
    let rows = [Complex64::ONE, a.conj(), a];
    let mut p1 = Matrix3x2::zeros();
    for (r, w) in rows.iter().enumerate() {
        p1[(r, 0)] = scale * w;
        p1[(r, 1)] = scale * w * half_j;
    }
    let p1 = DMatrix::from_fn(3, 2, |r, c| p1[(r, c)]);
    let m1 = p1.map(|x| x.conj());
    let abc_from_dq = LtpMatrix::from_terms(3, 2, [(1, p1), (-1, m1)]).expect("conjugate pair");
    let dq_from_abc = abc_from_dq.transposed();
    DqTransform {
        abc_from_dq,
        dq_from_abc,
    }
}

/// Direct trigonometric evaluation of the 3x2 synthesis matrix at angle
/// `theta`, used by the time-domain simulator and as a test oracle.
pub fn dq_transform_at(theta: f64) -> Matrix3x2<f64> {
    let k = (2.0f64 / 3.0).sqrt();
    let t = theta;
    let s = 2.0 * std::f64::consts::PI / 3.0;
    Matrix3x2::new(
        k * t.cos(),
        -k * t.sin(),
        k * (t - s).cos(),
        -k * (t - s).sin(),
        k * (t + s).cos(),
        -k * (t + s).sin(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_entry_at_zero_offset() {
        let t = dq_transform_coefficients(0.0);
        let p1 = t.abc_from_dq.term(1);
        let want = (2.0f64 / 3.0).sqrt() / 2.0;
        assert!((p1[(0, 0)] - Complex64::new(want, 0.0)).norm() < 1e-15);
        assert!((p1[(0, 0)].re - 0.40825).abs() < 1e-5);
        // -1/(2j) = +j/2 on the second column.
        assert!((p1[(0, 1)] - Complex64::new(0.0, want)).norm() < 1e-15);
    }

    #[test]
    fn negative_order_is_conjugate() {
        let t = dq_transform_coefficients(0.734);
        let dev = (t.abc_from_dq.term(-1) - t.abc_from_dq.term(1).map(|x| x.conj())).norm();
        assert!(dev < 1e-15);
    }

    #[test]
    fn coefficients_reconstruct_the_trig_matrix() {
        let w1 = 2.0 * std::f64::consts::PI * 50.0;
        for &theta0 in &[0.0, 1.2, -2.4] {
            let t = dq_transform_coefficients(theta0);
            for k in 0..8 {
                let time = k as f64 * 1.7e-3;
                let rec = t.abc_from_dq.eval_real(w1, time);
                let direct = dq_transform_at(w1 * time + theta0);
                let mut dev = 0.0f64;
                for r in 0..3 {
                    for c in 0..2 {
                        dev = dev.max((rec[(r, c)] - direct[(r, c)]).abs());
                    }
                }
                assert!(dev < 1e-12, "deviation {dev}");
            }
        }
    }

    #[test]
    fn transform_pair_is_orthonormal() {
        // T_dq_from_abc(t) * T_abc_from_dq(t) = I_2 at any instant.
        let t = dq_transform_coefficients(0.41);
        let prod = t.dq_from_abc.mul(&t.abc_from_dq);
        let w1 = 100.0 * std::f64::consts::PI;
        for k in 0..5 {
            let time = k as f64 * 9.3e-4;
            let m = prod.eval_real(w1, time);
            assert!((m - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
    }
}
