use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{LtpMatrix, SpectralParams};

/// Block-Toeplitz lift of an LTP matrix over the harmonic order set.
///
/// Block `(i, j)` equals the Fourier coefficient `M_{h_i - h_j}` of the
/// source matrix, so multiplication by the operator realizes the
/// time-domain product `M(t) x(t)` on stacked harmonic coefficients,
/// truncated to the band. Time-invariant sources lift to block-diagonal
/// operators; order-(+-1) sources populate the first block off-diagonals.
#[derive(Debug, Clone)]
pub struct ToeplitzOperator {
    params: SpectralParams,
    block_rows: usize,
    block_cols: usize,
    dense: DMatrix<Complex64>,
    /// Orders of the source matrix that exceeded the representable band
    /// `|h| <= 2*h_max` and were dropped by the lift.
    truncated_orders: Vec<i32>,
}

impl ToeplitzOperator {
    pub fn params(&self) -> SpectralParams {
        self.params
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    /// Dense matrix of shape `(len*block_rows, len*block_cols)`.
    pub fn dense(&self) -> &DMatrix<Complex64> {
        &self.dense
    }

    pub fn into_dense(self) -> DMatrix<Complex64> {
        self.dense
    }

    /// Block at order pair `(h_row, h_col)`.
    pub fn block(&self, h_row: i32, h_col: i32) -> DMatrix<Complex64> {
        let i = self.params.index_of(h_row).expect("row order in band");
        let j = self.params.index_of(h_col).expect("col order in band");
        self.dense
            .view((i * self.block_rows, j * self.block_cols), (self.block_rows, self.block_cols))
            .into_owned()
    }

    /// Source orders dropped because they exceeded `2*h_max`.
    pub fn truncated_orders(&self) -> &[i32] {
        &self.truncated_orders
    }

    /// Apply to a stacked coefficient vector (length `len*block_cols`).
    pub fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        &self.dense * x
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dense.shape(), other.dense.shape());
        Self {
            params: self.params,
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            dense: &self.dense + &other.dense,
            truncated_orders: Vec::new(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dense.shape(), other.dense.shape());
        Self {
            params: self.params,
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            dense: &self.dense - &other.dense,
            truncated_orders: Vec::new(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.block_cols, other.block_rows);
        Self {
            params: self.params,
            block_rows: self.block_rows,
            block_cols: other.block_cols,
            dense: &self.dense * &other.dense,
            truncated_orders: Vec::new(),
        }
    }
}

/// Lift an LTP matrix to its block-Toeplitz operator over the order set of
/// `sp`. Stored source orders beyond `2*h_max` cannot appear in any block
/// difference and are recorded as truncated.
pub fn toeplitz_lift(m: &LtpMatrix, sp: SpectralParams) -> ToeplitzOperator {
    let len = sp.len();
    let (br, bc) = (m.rows(), m.cols());
    let mut dense = DMatrix::zeros(len * br, len * bc);
    let max_band = 2 * sp.h_max() as i32;
    let truncated: Vec<i32> = m.stored_orders().filter(|h| h.abs() > max_band).collect();
    for i in 0..len {
        for j in 0..len {
            let h = sp.order_at(i) - sp.order_at(j);
            if h.abs() > m.band() {
                continue;
            }
            let term = m.term(h);
            if term.norm() > 0.0 {
                dense.view_mut((i * br, j * bc), (br, bc)).copy_from(&term);
            }
        }
    }
    ToeplitzOperator {
        params: sp,
        block_rows: br,
        block_cols: bc,
        dense,
        truncated_orders: truncated,
    }
}

/// Harmonic derivative operator: block-diagonal with block `h` equal to
/// `j*h*w1*I_n`. Imposing steady state of `dx/dt = A(t)x + ...` in the
/// harmonic domain replaces `d/dt` with this operator.
pub fn harmonic_derivative(sp: SpectralParams, block_dim: usize) -> ToeplitzOperator {
    assert!(block_dim >= 1);
    let len = sp.len();
    let mut dense = DMatrix::zeros(len * block_dim, len * block_dim);
    let w1 = sp.omega1();
    for (i, h) in sp.orders().enumerate() {
        let jw = Complex64::new(0.0, h as f64 * w1);
        for k in 0..block_dim {
            dense[(i * block_dim + k, i * block_dim + k)] = jw;
        }
    }
    ToeplitzOperator {
        params: sp,
        block_rows: block_dim,
        block_cols: block_dim,
        dense,
        truncated_orders: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::HarmonicSpectrum;

    fn sp() -> SpectralParams {
        SpectralParams::new(50.0, 1)
    }

    #[test]
    fn lti_matrix_lifts_to_block_diagonal() {
        let m = LtpMatrix::from_constant_real(&DMatrix::identity(2, 2));
        let op = toeplitz_lift(&m, sp());
        for i in 0..3 {
            for j in 0..3 {
                let b = op
                    .dense()
                    .view((2 * i, 2 * j), (2, 2))
                    .into_owned();
                if i == j {
                    assert!((b - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-15);
                } else {
                    assert_eq!(b.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn order_one_matrix_fills_off_diagonals_with_conjugate_pair() {
        let m1 = DMatrix::from_element(1, 1, Complex64::new(0.3, 0.7));
        let m = LtpMatrix::from_terms(1, 1, [(1, m1.clone()), (-1, m1.map(|x| x.conj()))]).unwrap();
        let op = toeplitz_lift(&m, sp());
        // Main diagonal zero; lower diagonal (row order - col order = +1) holds M_{+1}.
        assert_eq!(op.block(0, 0).norm(), 0.0);
        assert!((op.block(0, -1)[(0, 0)] - m1[(0, 0)]).norm() < 1e-15);
        assert!((op.block(-1, 0)[(0, 0)] - m1[(0, 0)].conj()).norm() < 1e-15);
    }

    #[test]
    fn lift_matches_numerical_fourier_analysis_round_trip() {
        // Sample M(t) = M0 + 2 Re(M1 e^{jwt}) on a fine grid, recover the
        // coefficients by quadrature, lift both and compare.
        let m0 = DMatrix::from_fn(2, 2, |r, c| Complex64::new((r + 2 * c) as f64 * 0.1, 0.0));
        let m1 = DMatrix::from_fn(2, 2, |r, c| Complex64::new(0.05 * r as f64, -0.02 * c as f64));
        let m = LtpMatrix::from_terms(
            2,
            2,
            [(0, m0), (1, m1.clone()), (-1, m1.map(|x| x.conj()))],
        )
        .unwrap();
        let spp = sp();
        let w = spp.omega1();
        let n = 4096;
        let dt = spp.period() / n as f64;
        let mut recovered = Vec::new();
        for h in [-1i32, 0, 1] {
            let mut acc: DMatrix<Complex64> = DMatrix::zeros(2, 2);
            for k in 0..n {
                let t = k as f64 * dt;
                acc += m.eval(w, t) * Complex64::from_polar(1.0, -(h as f64) * w * t);
            }
            recovered.push((h, acc / Complex64::new(n as f64, 0.0)));
        }
        let m_rec = LtpMatrix::from_terms(2, 2, recovered).unwrap();
        let direct = toeplitz_lift(&m, spp);
        let via_fourier = toeplitz_lift(&m_rec, spp);
        assert!((direct.dense() - via_fourier.dense()).norm() < 1e-12);
    }

    #[test]
    fn derivative_blocks() {
        let spp = SpectralParams::new(50.0, 2);
        let op = harmonic_derivative(spp, 1);
        assert_eq!(op.block(0, 0)[(0, 0)], Complex64::ZERO);
        let j100pi = Complex64::new(0.0, 100.0 * std::f64::consts::PI);
        assert!((op.block(1, 1)[(0, 0)] - j100pi).norm() < 1e-12);
    }

    #[test]
    fn derivative_of_cosine_spectrum_is_minus_omega_sine() {
        let spp = SpectralParams::new(50.0, 2);
        let w = spp.omega1();
        let cos = HarmonicSpectrum::from_positive_orders(spp, [(1, Complex64::new(0.5, 0.0))])
            .unwrap();
        let x = DVector::from_column_slice(cos.coeffs());
        let d = harmonic_derivative(spp, 1).apply(&x);
        // -w sin(wt) has X_1 = j w / 2.
        let want = HarmonicSpectrum::from_positive_orders(spp, [(1, Complex64::new(0.0, 0.5 * w))])
            .unwrap();
        for i in 0..spp.len() {
            assert!((d[i] - want.coeffs()[i]).norm() < 1e-10);
        }
    }
}
