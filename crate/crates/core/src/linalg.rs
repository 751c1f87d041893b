//! Small dense complex matrices. Everything here is at most a few hundred
//! rows (the density-matrix superoperator), so plain row-major storage and
//! textbook algorithms are sufficient.

use crate::error::{Error, Result};
use crate::scalar::{czero, re, Cplx, Real};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CMatrix<T: Real> {
    n: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![czero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = re(T::one());
        }
        m
    }

    /// Builds a matrix column by column from the images of the unit vectors.
    pub fn from_columns<F>(n: usize, mut column: F) -> Result<Self>
    where
        F: FnMut(&[Cplx<T>]) -> Result<Vec<Cplx<T>>>,
    {
        let mut m = Self::zeros(n);
        let mut unit = vec![czero(); n];
        for j in 0..n {
            unit[j] = re(T::one());
            let col = column(&unit)?;
            unit[j] = czero();
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn mul_vec(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut out = vec![czero(); self.n];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn mul_vec_into(&self, v: &[Cplx<T>], out: &mut [Cplx<T>]) {
        debug_assert_eq!(v.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(v).fold(czero(), |acc, (a, b)| acc + *a * *b);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `self^power` by repeated squaring.
    pub fn pow(&self, mut power: u64) -> Self {
        let mut acc = Self::identity(self.n);
        let mut base = self.clone();
        while power > 0 {
            if power & 1 == 1 {
                acc = acc.mul(&base);
            }
            power >>= 1;
            if power > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Solves `self * x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
        }
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = a.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        if scale == T::zero() {
            return Err(Error::Singular);
        }
        let tiny = scale * T::epsilon() * T::count(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .norm()
                        .partial_cmp(&a[j * n + col].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty range");
            if a[pivot * n + col].norm() <= tiny {
                return Err(Error::Singular);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                b.swap(col, pivot);
            }
            let p = a[col * n + col];
            for row in col + 1..n {
                let f = a[row * n + col] / p;
                if f.re == T::zero() && f.im == T::zero() {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] = a[row * n + k] - f * a[col * n + k];
                }
                b[row] = b[row] - f * b[col];
            }
        }
        let mut x = vec![czero(); n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in row + 1..n {
                acc = acc - a[row * n + k] * x[k];
            }
            x[row] = acc / a[row * n + row];
        }
        Ok(x)
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Cplx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.n + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.n + j]
    }
}
