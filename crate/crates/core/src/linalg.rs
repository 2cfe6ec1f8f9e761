//! Dense matrices over a coefficient field.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Coeff;

#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Coeff> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul(c)).collect(),
        }
    }

    /// Matrix product; zero entries on both sides are skipped, which keeps
    /// products of sparse triangular jet matrices cheap.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let sparse_rows: Vec<Vec<(usize, &F)>> = (0..other.rows)
            .map(|k| {
                other
                    .row(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| !b.is_zero())
                    .collect()
            })
            .collect();
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, row) in sparse_rows.iter().enumerate() {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for &(j, b) in row {
                    let idx = i * out.cols + j;
                    let p = a.mul(b);
                    out.data[idx].add_assign(&p);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc.add_assign(&a.mul(b));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Coeff::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j).is_zero()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Coeff::abs).fold(0.0, f64::max)
    }

    /// Maximum over columns of the sum of absolute values.
    pub fn max_column_abs_sum(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Index of a pivot in column `col` among rows `from..`; exact fields
    /// take the first nonzero entry, floats the largest one.
    fn pivot_row(&self, col: usize, from: usize, scale: f64) -> Option<usize> {
        if F::is_exact() {
            (from..self.rows).find(|&r| !self.get(r, col).is_zero())
        } else {
            (from..self.rows)
                .max_by(|&a, &b| self.get(a, col).abs().total_cmp(&self.get(b, col).abs()))
                .filter(|&r| !self.get(r, col).is_negligible(scale))
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = m.max_abs();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = m.pivot_row(c, r, scale) else { continue };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv().expect("pivot is nonzero");
            for j in 0..m.cols {
                let v = m.get(r, j).mul(&inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    if m.get(r, j).is_zero() {
                        continue;
                    }
                    let v = m.get(i, j).sub(&f.mul(m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, F::one());
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::SingularMatrix);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, red.get(i, n + j).clone());
            }
        }
        Ok(inv)
    }

    /// Inverse of a lower-triangular matrix by forward substitution.
    pub fn inverse_lower_triangular(&self) -> Result<Self> {
        let n = self.rows;
        let diag_inv = (0..n)
            .map(|i| self.get(i, i).inv().filter(|_| !self.get(i, i).is_zero()))
            .collect::<Option<Vec<F>>>()
            .ok_or(Error::SingularMatrix)?;
        let mut x = Self::zeros(n, n);
        for j in 0..n {
            x.set(j, j, diag_inv[j].clone());
            for (i, di) in diag_inv.iter().enumerate().skip(j + 1) {
                let mut acc = F::zero();
                for k in j..i {
                    let (a, b) = (self.get(i, k), x.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc.add_assign(&a.mul(b));
                    }
                }
                if !acc.is_zero() {
                    x.set(i, j, acc.neg().mul(di));
                }
            }
        }
        Ok(x)
    }

    /// Solves `self * x = b` for square invertible `self`.
    pub fn solve(&self, b: &[F]) -> Result<Vec<F>> {
        Ok(self.inverse()?.mul_vec(b))
    }
}

impl<F: Coeff> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|c| c.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational as Q;

    fn m(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| Q::from_i64(v)).collect()).collect())
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(3));
        let l = m(&[&[2, 0, 0], &[1, 3, 0], &[5, 1, 4]]);
        assert_eq!(l.inverse_lower_triangular().unwrap(), l.inverse().unwrap());
    }

    #[test]
    fn singular_and_rank() {
        let a = m(&[&[1, 2], &[2, 4]]);
        assert_eq!(a.inverse(), Err(Error::SingularMatrix));
        assert_eq!(a.rank(), 1);
        let (r, p) = m(&[&[0, 2, 4], &[0, 1, 3]]).rref();
        assert_eq!(p, vec![1, 2]);
        assert_eq!(r, m(&[&[0, 1, 0], &[0, 0, 1]]));
    }
}
