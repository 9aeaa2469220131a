use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// LU factorization of a banded complex matrix with partial pivoting.
///
/// The lifted steady-state operators of this crate are block-banded: block
/// `(i, j)` vanishes for `|i - j| > band`, so the scalar bandwidth is
/// `band*dim + dim - 1` on both sides. Factoring in band storage costs
/// `O(n * kl * (kl + ku))` instead of the dense cubic cost, which keeps
/// repeated response evaluations cheap inside the Newton loop.
///
/// Row pivoting is essential here: the diagonal block at the DC order
/// contains the controller integrator rows, whose values are determined
/// only through couplings to neighboring harmonic blocks, so an unpivoted
/// elimination meets a singular leading minor.
pub struct BlockBandedLu {
    n: usize,
    dim: usize,
    kl: usize,
    ku_eff: usize,
    ldab: usize,
    /// Band storage, column-major: entry `(i, j)` lives at
    /// `ab[j*ldab + (kl + ku_eff - kl) + i - j]` shifted for fill rows.
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BlockBandedLu {
    /// Factor the matrix whose block `(i, j)` (blocks of size `dim`,
    /// block bandwidth `band`) is produced by `block` (`None` meaning a
    /// zero block). Returns the offending block row if a column has no
    /// usable pivot.
    pub fn factor<F>(n_blocks: usize, dim: usize, band: usize, block: F) -> Result<Self, usize>
    where
        F: Fn(usize, usize) -> Option<DMatrix<Complex64>>,
    {
        let n = n_blocks * dim;
        let kl = band * dim + dim - 1;
        let ku = kl;
        let ku_eff = kl + ku;
        let ldab = kl + ku_eff + 1;
        let mut ab = vec![Complex64::ZERO; ldab * n];
        let row_of = |i: usize, j: usize| kl + ku_eff + i - j;

        for bj in 0..n_blocks {
            let lo = bj.saturating_sub(band);
            let hi = (bj + band).min(n_blocks - 1);
            for bi in lo..=hi {
                if let Some(m) = block(bi, bj) {
                    debug_assert_eq!(m.shape(), (dim, dim));
                    for a in 0..dim {
                        for b in 0..dim {
                            let (i, j) = (bi * dim + a, bj * dim + b);
                            if i + kl >= j && j + ku >= i {
                                ab[j * ldab + row_of(i, j)] = m[(a, b)];
                            }
                        }
                    }
                }
            }
        }

        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            // Pivot search down the column.
            let mut p = j;
            let mut best = ab[j * ldab + row_of(j, j)].norm_sqr();
            for i in (j + 1)..=i_max {
                let v = ab[j * ldab + row_of(i, j)].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(j / dim);
            }
            ipiv[j] = p;
            let c_max = (j + ku_eff).min(n - 1);
            if p != j {
                for c in j..=c_max {
                    let rj = c * ldab + row_of(j, c);
                    let rp = c * ldab + row_of(p, c);
                    ab.swap(rj, rp);
                }
            }
            let pivot = ab[j * ldab + row_of(j, j)];
            for i in (j + 1)..=i_max {
                let idx = j * ldab + row_of(i, j);
                let m = ab[idx] / pivot;
                ab[idx] = m;
                if m != Complex64::ZERO {
                    for c in (j + 1)..=c_max {
                        let u = ab[c * ldab + row_of(j, c)];
                        if u != Complex64::ZERO {
                            ab[c * ldab + row_of(i, c)] -= m * u;
                        }
                    }
                }
            }
        }

        Ok(Self {
            n,
            dim,
            kl,
            ku_eff,
            ldab,
            ab,
            ipiv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_dim(&self) -> usize {
        self.dim
    }

    /// Solve in place for one stacked right-hand side.
    pub fn solve_in_place(&self, b: &mut DVector<Complex64>) {
        assert_eq!(b.len(), self.n);
        let row_of = |i: usize, j: usize| self.kl + self.ku_eff + i - j;
        // Forward: apply pivots and the unit-lower factor.
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                b.swap_rows(j, p);
            }
            let bj = b[j];
            if bj != Complex64::ZERO {
                let i_max = (j + self.kl).min(self.n - 1);
                for i in (j + 1)..=i_max {
                    let m = self.ab[j * self.ldab + row_of(i, j)];
                    if m != Complex64::ZERO {
                        b[i] -= m * bj;
                    }
                }
            }
        }
        // Backward: the upper factor with fill.
        for j in (0..self.n).rev() {
            let x = b[j] / self.ab[j * self.ldab + row_of(j, j)];
            b[j] = x;
            if x != Complex64::ZERO {
                let i_min = j.saturating_sub(self.ku_eff);
                for i in i_min..j {
                    let u = self.ab[j * self.ldab + row_of(i, j)];
                    if u != Complex64::ZERO {
                        b[i] -= u * x;
                    }
                }
            }
        }
    }

    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve for many right-hand sides at once. `rhs` holds one system per
    /// row (shape `m x n`), so each elimination step runs as a contiguous
    /// column operation over all systems; this amortizes streaming the
    /// factor through memory, which dominates single-vector solves.
    pub fn solve_multi_in_place(&self, rhs: &mut DMatrix<Complex64>) {
        assert_eq!(rhs.ncols(), self.n);
        let m = rhs.nrows();
        if m == 0 {
            return;
        }
        let row_of = |i: usize, j: usize| self.kl + self.ku_eff + i - j;
        let mut tmp = vec![Complex64::ZERO; m];
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                rhs.swap_columns(j, p);
            }
            tmp.copy_from_slice(rhs.column(j).as_slice());
            let i_max = (j + self.kl).min(self.n - 1);
            for i in (j + 1)..=i_max {
                let mult = self.ab[j * self.ldab + row_of(i, j)];
                if mult != Complex64::ZERO {
                    let col = &mut rhs.column_mut(i);
                    for (k, t) in tmp.iter().enumerate() {
                        col[k] -= mult * t;
                    }
                }
            }
        }
        for j in (0..self.n).rev() {
            let pivot = self.ab[j * self.ldab + row_of(j, j)];
            {
                let col = &mut rhs.column_mut(j);
                for k in 0..m {
                    col[k] /= pivot;
                }
            }
            tmp.copy_from_slice(rhs.column(j).as_slice());
            let i_min = j.saturating_sub(self.ku_eff);
            for i in i_min..j {
                let u = self.ab[j * self.ldab + row_of(i, j)];
                if u != Complex64::ZERO {
                    let col = &mut rhs.column_mut(i);
                    for (k, t) in tmp.iter().enumerate() {
                        col[k] -= u * t;
                    }
                }
            }
        }
    }
}
