use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

/// Rotation operator `alpha = exp(j 2 pi / 3)`.
pub fn alpha() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0)
}

/// Fortescue synthesis matrix with columns ordered (homopolar, positive,
/// negative) and unit entries; the analysis inverse carries the 1/3 factor,
/// so a balanced phase set and its positive-sequence component share one
/// magnitude.
pub fn fortescue_matrix() -> Matrix3<Complex64> {
    let a = alpha();
    let one = Complex64::ONE;
    Matrix3::new(
        one, one, one, //
        one, a * a, a, //
        one, a, a * a,
    )
}

/// Compound phase-domain matrix of a balanced element given its sequence
/// values: `A diag(z0, z+, z-) A^{-1}`. The result is circulant-symmetric
/// with diagonal `(z0 + 2 z+)/3` and off-diagonals `(z0 - z+)/3` when
/// `z- = z+`.
pub fn fortescue_to_phase(z_pos: Complex64, z_neg: Complex64, z_zero: Complex64) -> Matrix3<Complex64> {
    let a = fortescue_matrix();
    let d = Matrix3::from_diagonal(&Vector3::new(z_zero, z_pos, z_neg));
    let a_inv = a.map(|x| x.conj()).transpose() / Complex64::new(3.0, 0.0);
    a * d * a_inv
}

/// Sequence components `(X+, X-, X0)` of one three-phase coefficient set.
pub fn sequence_decompose(phases: [Complex64; 3]) -> (Complex64, Complex64, Complex64) {
    let a = alpha();
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let [xa, xb, xc] = phases;
    let x0 = third * (xa + xb + xc);
    let xp = third * (xa + a * xb + a * a * xc);
    let xn = third * (xa + a * a * xb + a * xc);
    (xp, xn, x0)
}

/// Phase coefficients from sequence components `(X+, X-, X0)`.
pub fn sequence_compose(xp: Complex64, xn: Complex64, x0: Complex64) -> [Complex64; 3] {
    let a = alpha();
    [
        x0 + xp + xn,
        x0 + a * a * xp + a * xn,
        x0 + a * xp + a * a * xn,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_sequence_values_give_scaled_identity() {
        let z = Complex64::new(0.3, 0.1);
        let m = fortescue_to_phase(z, z, z);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { z } else { Complex64::ZERO };
                assert!((m[(r, c)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ug1_resistances_produce_expected_compound_entries() {
        // Sequence resistances 0.162 / 0.162 / 0.529 ohm.
        let m = fortescue_to_phase(
            Complex64::new(0.162, 0.0),
            Complex64::new(0.162, 0.0),
            Complex64::new(0.529, 0.0),
        );
        let diag = (0.529 + 2.0 * 0.162) / 3.0;
        let off = (0.529 - 0.162) / 3.0;
        assert!((m[(0, 0)].re - diag).abs() < 1e-12);
        assert!((m[(0, 0)].re - 0.2843).abs() < 1e-4);
        assert!((m[(0, 1)].re - off).abs() < 1e-12);
        assert!((m[(0, 1)].re - 0.1223).abs() < 1e-4);
        for r in 0..3 {
            for c in 0..3 {
                assert!(m[(r, c)].im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eigenpairs_are_the_sequence_values() {
        // The Fortescue columns are eigenvectors of any circulant compound
        // matrix; check A v = lambda v directly for random sequence values.
        let (zp, zn, z0) = (
            Complex64::new(0.4, 1.2),
            Complex64::new(-0.3, 0.8),
            Complex64::new(2.0, -0.5),
        );
        let m = fortescue_to_phase(zp, zn, z0);
        let a = fortescue_matrix();
        for (col, lambda) in [(0, z0), (1, zp), (2, zn)] {
            let v = a.column(col);
            let mv = m * v;
            let want = v.map(|x| lambda * x);
            assert!((mv - want).norm() < 1e-13);
        }
    }

    #[test]
    fn decompose_trivial_sets() {
        let a = alpha();
        // Balanced positive set (1, a^2, a).
        let (xp, xn, x0) = sequence_decompose([Complex64::ONE, a * a, a]);
        assert!((xp - Complex64::ONE).norm() < 1e-14);
        assert!(xn.norm() < 1e-14);
        assert!(x0.norm() < 1e-14);
        // Equal phases are purely homopolar.
        let (xp, xn, x0) = sequence_decompose([Complex64::ONE; 3]);
        assert!(xp.norm() < 1e-14);
        assert!(xn.norm() < 1e-14);
        assert!((x0 - Complex64::ONE).norm() < 1e-14);
    }

    #[test]
    fn compose_inverts_decompose() {
        let phases = [
            Complex64::new(0.3, -1.1),
            Complex64::new(-0.7, 0.2),
            Complex64::new(1.9, 0.5),
        ];
        let (xp, xn, x0) = sequence_decompose(phases);
        let back = sequence_compose(xp, xn, x0);
        for p in 0..3 {
            assert!((back[p] - phases[p]).norm() < 1e-12);
        }
    }
}
