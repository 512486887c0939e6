//! Thin-plate spline interpolation with a linear polynomial tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};
use crate::scalar::Real;

/// `s(x) = Σ w_i φ(|x − c_i|) + a_0 + a·x` with `φ(r) = r² ln r`, and
/// `Σ w_i = 0`, `Σ w_i c_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct ThinPlateRbf<T> {
    centers: Vec<Vec<T>>,
    weights: Vec<T>,
    /// Constant term followed by one coefficient per coordinate.
    tail: Vec<T>,
}

#[inline]
fn kernel<T: Real>(r2: T) -> T {
    // r² ln r = r² ln(r²) / 2, continuous with value 0 at r = 0
    if r2 > T::zero() {
        r2 * r2.ln() * T::half()
    } else {
        T::zero()
    }
}

fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

impl<T: Real> ThinPlateRbf<T> {
    /// Interpolates `values` at `centers`. Needs at least `d + 1` centers
    /// not contained in a hyperplane; otherwise the system is singular.
    pub fn fit(centers: &[Vec<T>], values: &[T]) -> Result<Self> {
        let n = centers.len();
        let d = centers.first().map_or(0, Vec::len);
        if n != values.len() || centers.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidArgument("centers and values disagree in shape".into()));
        }
        if n < d + 1 {
            return Err(Error::TooFewPoints { needed: d + 1, got: n });
        }
        let m = n + d + 1;
        let mut a = Matrix::zeros(m, m);
        for i in 0..n {
            for j in 0..i {
                let k = kernel(dist2(&centers[i], &centers[j]));
                a.set(i, j, k);
                a.set(j, i, k);
            }
            a.set(i, n, T::one());
            a.set(n, i, T::one());
            for (t, &x) in centers[i].iter().enumerate() {
                a.set(i, n + 1 + t, x);
                a.set(n + 1 + t, i, x);
            }
        }
        let mut rhs = values.to_vec();
        rhs.resize(m, T::zero());
        let sol = solve(&a, &rhs)?;
        Ok(Self { centers: centers.to_vec(), weights: sol[..n].to_vec(), tail: sol[n..].to_vec() })
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        let radial: T = self.centers.iter().zip(&self.weights).map(|(c, &w)| w * kernel(dist2(c, x))).sum();
        let linear: T = self.tail[1..].iter().zip(x).map(|(&a, &v)| a * v).sum();
        radial + self.tail[0] + linear
    }
}
