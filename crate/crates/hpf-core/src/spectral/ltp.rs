use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SpectralError;

/// Fourier-coefficient representation of a linear time-periodic matrix,
/// `M(t) = sum_h M_h exp(j h w1 t)`. Only nonzero orders are stored.
///
/// A real-valued `M(t)` satisfies `M_{-h} = conj(M_h)`; all constructors in
/// this crate produce such matrices and products preserve the property.
#[derive(Debug, Clone, PartialEq)]
pub struct LtpMatrix {
    rows: usize,
    cols: usize,
    terms: BTreeMap<i32, DMatrix<Complex64>>,
}

impl LtpMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            terms: BTreeMap::new(),
        }
    }

    /// Time-invariant matrix: only the order-0 coefficient is nonzero.
    pub fn from_constant_real(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zero(m.nrows(), m.ncols());
        out.add_term(0, m.map(|x| Complex64::new(x, 0.0)))
            .expect("shape consistent by construction");
        out
    }

    /// Build from explicit coefficient terms; every stored matrix must have
    /// the same shape, and `M_{-h}` must equal `conj(M_h)`.
    pub fn from_terms<I>(rows: usize, cols: usize, terms: I) -> Result<Self, SpectralError>
    where
        I: IntoIterator<Item = (i32, DMatrix<Complex64>)>,
    {
        let mut out = Self::zero(rows, cols);
        for (h, m) in terms {
            out.add_term(h, m)?;
        }
        out.check_real_symmetry(1e-12)?;
        Ok(out)
    }

    fn add_term(&mut self, h: i32, m: DMatrix<Complex64>) -> Result<(), SpectralError> {
        if m.nrows() != self.rows || m.ncols() != self.cols {
            return Err(SpectralError::DimensionMismatch {
                order: h,
                rows: m.nrows(),
                cols: m.ncols(),
                exp_rows: self.rows,
                exp_cols: self.cols,
            });
        }
        match self.terms.entry(h) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(m);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &m;
                e.insert(sum);
            }
        }
        Ok(())
    }

    fn check_real_symmetry(&self, tol: f64) -> Result<(), SpectralError> {
        for (&h, m) in &self.terms {
            if h < 0 {
                continue;
            }
            let conj = m.map(|x| x.conj());
            let neg = self.term(-h);
            let dev = (&conj - &neg).norm();
            if dev > tol * (1.0 + m.norm()) {
                return Err(SpectralError::NonHermitian {
                    order: h,
                    deviation: dev,
                });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Coefficient at order `h` (zero matrix if absent).
    pub fn term(&self, h: i32) -> DMatrix<Complex64> {
        self.terms
            .get(&h)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    /// Orders with a stored (possibly zero) coefficient.
    pub fn stored_orders(&self) -> impl Iterator<Item = i32> + '_ {
        self.terms.keys().copied()
    }

    /// Largest stored order magnitude; 0 for a zero/time-invariant matrix.
    pub fn band(&self) -> i32 {
        self.terms.keys().map(|h| h.abs()).max().unwrap_or(0)
    }

    /// Evaluate `M(t)`.
    pub fn eval(&self, omega1: f64, t: f64) -> DMatrix<Complex64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for (&h, m) in &self.terms {
            acc += m * Complex64::from_polar(1.0, h as f64 * omega1 * t);
        }
        acc
    }

    /// Evaluate `M(t)` and take the real part (valid for real LTP matrices).
    pub fn eval_real(&self, omega1: f64, t: f64) -> DMatrix<f64> {
        self.eval(omega1, t).map(|x| x.re)
    }

    /// Product `M(t) N(t)`: Fourier orders add, `(MN)_h = sum_k M_k N_{h-k}`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "LTP product dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zero(self.rows, other.cols);
        for (&ha, ma) in &self.terms {
            for (&hb, mb) in &other.terms {
                out.add_term(ha + hb, ma * mb).expect("shapes fixed");
            }
        }
        out.prune();
        out
    }

    /// Sum `M(t) + N(t)`.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (&h, m) in &other.terms {
            out.add_term(h, m.clone()).expect("shapes fixed");
        }
        out.prune();
        out
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for m in out.terms.values_mut() {
            *m *= Complex64::new(k, 0.0);
        }
        out
    }

    /// Coefficient-wise transpose, giving the transpose of `M(t)`.
    pub fn transposed(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            terms: self
                .terms
                .iter()
                .map(|(&h, m)| (h, m.transpose()))
                .collect(),
        }
    }

    /// Coefficients of `d/dt M(t)`: order `h` scales by `j h w1`.
    pub fn time_derivative(&self, omega1: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            terms: self
                .terms
                .iter()
                .map(|(&h, m)| (h, m * Complex64::new(0.0, h as f64 * omega1)))
                .collect(),
        }
    }

    /// Block-diagonal replication: `M(t)` applied to `n` stacked 3-vector
    /// (or generally `cols`-vector) channels at once.
    pub fn block_diag_replicate(&self, n: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (&h, m) in &self.terms {
            let mut big = DMatrix::zeros(self.rows * n, self.cols * n);
            for k in 0..n {
                big.view_mut((k * self.rows, k * self.cols), (self.rows, self.cols))
                    .copy_from(m);
            }
            terms.insert(h, big);
        }
        Self {
            rows: self.rows * n,
            cols: self.cols * n,
            terms,
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, m| m.norm() > 0.0);
    }

    /// Flat variant of [`apply_lifted`](Self::apply_lifted): input and output
    /// are stacked per-order blocks in one contiguous slice (`len` blocks of
    /// `cols` / `rows` entries). Accumulates into `out`.
    pub fn apply_lifted_flat(&self, input: &[Complex64], out: &mut [Complex64], len: usize) {
        debug_assert_eq!(input.len(), len * self.cols);
        debug_assert_eq!(out.len(), len * self.rows);
        let h_max = (len as i32 - 1) / 2;
        for (&k, m) in &self.terms {
            for i in 0..len as i32 {
                let src = i - h_max - k;
                if src.abs() > h_max {
                    continue;
                }
                let w = &input[((src + h_max) as usize) * self.cols..][..self.cols];
                let y = &mut out[(i as usize) * self.rows..][..self.rows];
                for c in 0..self.cols {
                    let wc = w[c];
                    if wc != Complex64::ZERO {
                        for (r, yr) in y.iter_mut().enumerate() {
                            *yr += m[(r, c)] * wc;
                        }
                    }
                }
            }
        }
    }

    /// Apply to a lifted coefficient vector: given input block coefficients
    /// `W_h` (indexed `-h_max..=h_max`, each of length `cols`), produce
    /// output blocks `Y_h = sum_k M_k W_{h-k}` truncated to the same band.
    pub fn apply_lifted(&self, input: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
        let n = input.len();
        let h_max = (n as i32 - 1) / 2;
        let ncols_rhs = input.first().map_or(1, |m| m.ncols());
        let mut out = vec![DMatrix::zeros(self.rows, ncols_rhs); n];
        for (&k, m) in &self.terms {
            for (i, out_h) in out.iter_mut().enumerate() {
                let h = i as i32 - h_max;
                let src = h - k;
                if src.abs() <= h_max {
                    *out_h += m * &input[(src + h_max) as usize];
                }
            }
        }
        out
    }
}
