use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{Mat2, Operator};

/// Tensor product of single-spin unitaries `u_0 ⊗ u_1 ⊗ … ⊗ u_{N−1}`.
///
/// Applying one costs O(N·d²) instead of a dense d³ product.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    pub factors: Vec<Mat2>,
}

impl LocalUnitary {
    pub fn identity(n_spins: usize) -> Self {
        LocalUnitary { factors: vec![Mat2::identity(); n_spins] }
    }

    pub fn n_spins(&self) -> usize {
        self.factors.len()
    }

    pub fn dagger(&self) -> Self {
        LocalUnitary { factors: self.factors.iter().map(Mat2::dagger).collect() }
    }

    /// `self · other`, spin by spin.
    pub fn compose(&self, other: &LocalUnitary) -> Self {
        LocalUnitary {
            factors: self.factors.iter().zip(&other.factors).map(|(a, b)| *a * *b).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|f| *f == Mat2::identity())
    }

    /// `M ← L·M`.
    pub fn apply_left(&self, m: &mut Array2<C64>) {
        let n = self.n_spins();
        let cols = m.ncols();
        for (i, u) in self.factors.iter().enumerate() {
            if *u == Mat2::identity() {
                continue;
            }
            let u = u.0;
            let mask = 1usize << (n - 1 - i);
            let data = m.as_slice_mut().expect("standard layout");
            for r0 in 0..(1usize << n) {
                if r0 & mask != 0 {
                    continue;
                }
                let r1 = r0 | mask;
                let (lo, hi) = data.split_at_mut(r1 * cols);
                let row0 = &mut lo[r0 * cols..r0 * cols + cols];
                let row1 = &mut hi[..cols];
                for (a, b) in row0.iter_mut().zip(row1.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = u[0][0] * x + u[0][1] * y;
                    *b = u[1][0] * x + u[1][1] * y;
                }
            }
        }
    }

    /// `M ← M·L`.
    pub fn apply_right(&self, m: &mut Array2<C64>) {
        let n = self.n_spins();
        for (i, u) in self.factors.iter().enumerate() {
            if *u == Mat2::identity() {
                continue;
            }
            let u = u.0;
            let mask = 1usize << (n - 1 - i);
            for mut row in m.rows_mut() {
                let row = row.as_slice_mut().expect("standard layout");
                for c0 in 0..row.len() {
                    if c0 & mask != 0 {
                        continue;
                    }
                    let c1 = c0 | mask;
                    let (x, y) = (row[c0], row[c1]);
                    row[c0] = x * u[0][0] + y * u[1][0];
                    row[c1] = x * u[0][1] + y * u[1][1];
                }
            }
        }
    }

    /// `M ← L·M·L†`.
    pub fn conjugate(&self, m: &mut Array2<C64>) {
        self.apply_left(m);
        self.dagger().apply_right(m);
    }

    pub fn conjugate_operator(&self, op: &Operator) -> Operator {
        let mut m = op.matrix().as_standard_layout().to_owned();
        self.conjugate(&mut m);
        Operator::from_parts(m, op.is_hermitian())
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let d = 1usize << self.n_spins();
        let mut m = Array2::eye(d);
        self.apply_left(&mut m);
        m
    }
}
