//! Small dense solvers over [`Real`] scalars.
//!
//! Systems here are tiny (a cubic fit, an RBF system over a few dozen
//! centers), so matrices are plain row-major `Vec`s.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns [`Error::Singular`] when a pivot falls below
/// `n * eps * max|a|`.
pub fn solve<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::InvalidArgument("solve needs a square system".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let threshold = T::of_usize(n.max(1)) * T::epsilon() * m.max_abs();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m.get(i, col).abs().partial_cmp(&m.get(j, col).abs()).unwrap())
            .unwrap();
        if !(m.get(pivot, col).abs() > threshold) {
            return Err(Error::Singular);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m.get(col, c);
                m.set(col, c, m.get(pivot, c));
                m.set(pivot, c, tmp);
            }
            x.swap(col, pivot);
        }
        let d = m.get(col, col);
        for r in col + 1..n {
            let f = m.get(r, col) / d;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = m.get(r, c) - f * m.get(col, c);
                m.set(r, c, v);
            }
            let v = x[r] - f * x[col];
            x[r] = v;
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for c in r + 1..n {
            s -= m.get(r, c) * x[c];
        }
        x[r] = s / m.get(r, r);
    }
    Ok(x)
}

/// Least-squares solution of the overdetermined system `a x ≈ b` via
/// Householder QR. Requires full column rank.
pub fn lstsq<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let (m, n) = (a.rows(), a.cols());
    if m < n || b.len() != m {
        return Err(Error::InvalidArgument(format!("lstsq on a {m}x{n} system with {} rhs", b.len())));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let scale = r.max_abs();
    let threshold = T::of_usize(m.max(n)) * T::epsilon() * scale;
    for k in 0..n {
        let norm = (k..m).map(|i| r.get(i, k) * r.get(i, k)).sum::<T>().sqrt();
        if !(norm > threshold) {
            return Err(Error::Singular);
        }
        let alpha = if r.get(k, k) > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| r.get(i, k)).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&t| t * t).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for c in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * r.get(i, c)).sum();
            let f = T::two() * dot / vnorm2;
            for i in k..m {
                let val = r.get(i, c) - f * v[i - k];
                r.set(i, c, val);
            }
        }
        let dot: T = (k..m).map(|i| v[i - k] * y[i]).sum();
        let f = T::two() * dot / vnorm2;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = y[k];
        for c in k + 1..n {
            s -= r.get(k, c) * x[c];
        }
        x[k] = s / r.get(k, k);
    }
    Ok(x)
}
