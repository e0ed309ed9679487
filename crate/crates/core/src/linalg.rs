//! Small dense matrices, in floating point and exact rationals.

use std::ops::{Index, IndexMut};

use num_rational::BigRational;
use num_traits::Zero;

/// Square row-major `f64` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> DenseMatrix {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> DenseMatrix {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `vᵀ A`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    /// `A v`.
    pub fn right_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            let row = other.left_mul(self.row(i));
            out.data[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        out
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Square row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    n: usize,
    data: Vec<BigRational>,
}

impl ExactMatrix {
    pub fn zeros(n: usize) -> ExactMatrix {
        ExactMatrix { n, data: vec![BigRational::zero(); n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn left_mul(&self, v: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.n];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o += vi * a;
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &ExactMatrix) -> ExactMatrix {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            data.extend(other.left_mul(self.row(i)));
        }
        ExactMatrix { n, data }
    }

    pub fn to_f64(&self) -> DenseMatrix {
        use num_traits::ToPrimitive;
        DenseMatrix { n: self.n, data: self.data.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect() }
    }
}

impl Index<(usize, usize)> for ExactMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ExactMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.n + j]
    }
}

/// Solves `π A = π`, `Σπ = 1` exactly for an irreducible stochastic `A`.
pub fn exact_stationary(a: &ExactMatrix) -> Option<Vec<BigRational>> {
    use num_traits::One;
    let n = a.dim();
    // Rows: equations over the unknowns π_0..π_{n-1}; last column is the RHS.
    // Equation j (j < n-1): Σ_i π_i (A_ij − δ_ij) = 0; final row: Σ π_i = 1.
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|i| {
                    let mut v = a[(i, j)].clone();
                    if i == j {
                        v -= BigRational::one();
                    }
                    v
                })
                .collect();
            row.push(BigRational::zero());
            row
        })
        .collect();
    m[n - 1] = vec![BigRational::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = BigRational::one() / m[col][col].clone();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot = m[col].clone();
                for (dst, src) in m[r].iter_mut().zip(&pivot).skip(col) {
                    *dst -= &f * src;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn products_agree() {
        let a = DenseMatrix::from_rows(&[vec![0.5, 0.25], vec![0.125, 0.5]]);
        assert_eq!(a.left_mul(&[1.0, 2.0]), vec![0.75, 1.25]);
        assert_eq!(a.right_mul(&[1.0, 2.0]), vec![1.0, 1.125]);
        let a2 = a.matmul(&a);
        assert_eq!(a2[(0, 1)], 0.5 * 0.25 + 0.25 * 0.5);
        assert_eq!(DenseMatrix::identity(2).matmul(&a), a);
    }

    #[test]
    fn exact_stationary_two_state() {
        let mut a = ExactMatrix::zeros(2);
        a[(0, 0)] = q(1, 2);
        a[(0, 1)] = q(1, 2);
        a[(1, 0)] = q(1, 4);
        a[(1, 1)] = q(3, 4);
        let pi = exact_stationary(&a).unwrap();
        assert_eq!(pi, vec![q(1, 3), q(2, 3)]);
    }
}
