//! Small dense square matrices over a [`Scalar`].
//!
//! Dimensions here never exceed a few dozen, so a row-major `Vec` with
//! Cholesky factorisation covers every need of the geometry kernels.

use std::ops::{Index, IndexMut};

use crate::error::{GeometryError, Result};
use crate::scalar::{lit, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).fold(T::zero(), |s, k| s + self[(i, k)] * o[(k, j)]))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] + o[(i, j)])
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] - o[(i, j)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] * s)
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).fold(T::zero(), |s, k| s + self[(i, k)] * v[k]))
            .collect()
    }

    /// `uᵀ M v`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s = s + u[i] * self[(i, j)] * v[j];
            }
        }
        s
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn symmetric_part(&self) -> Self {
        Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)]) * lit(0.5))
    }

    /// Lower Cholesky factor; fails unless the matrix is symmetric positive definite.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(GeometryError::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self) -> Result<Self> {
        let n = self.n;
        let l = self.cholesky()?;
        let mut inv = Self::zeros(n);
        for col in 0..n {
            // forward then backward substitution for the unit vector e_col
            let mut y = vec![T::zero(); n];
            for i in 0..n {
                let mut s = if i == col { T::one() } else { T::zero() };
                for k in 0..i {
                    s = s - l[(i, k)] * y[k];
                }
                y[i] = s / l[(i, i)];
            }
            let mut x = vec![T::zero(); n];
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s = s - l[(k, i)] * x[k];
                }
                x[i] = s / l[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |s, (a, b)| s + *a * *b)
}

pub fn norm<T: Scalar>(u: &[T]) -> T {
    dot(u, u).sqrt()
}

pub fn axpy<T: Scalar>(a: T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(xi, yi)| a * *xi + *yi).collect()
}

pub fn scaled<T: Scalar>(a: T, x: &[T]) -> Vec<T> {
    x.iter().map(|xi| a * *xi).collect()
}
