use num_complex::Complex;

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::pauli::PauliObservable;
use crate::sim::statevector::{i_power, rz_phases, sqrt_x_matrix};

type C<T> = Complex<T>;

/// Tolerance for the trace / Hermiticity / positivity invariants.
pub const DENSITY_TOL: f64 = 1e-10;

/// Mixed state on `n` qubits, stored row-major as a `2^n × 2^n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    num_qubits: usize,
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn zero_state(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        let mut data = vec![C::new(T::zero(), T::zero()); dim * dim];
        data[0] = C::new(T::one(), T::zero());
        Self { num_qubits, dim, data }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> C<T> {
        self.data[row * self.dim + col]
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::SqrtX { qubit } => self.apply_1q(qubit, sqrt_x_matrix()),
            Gate::Rz { qubit, angle } => self.apply_rz(qubit, angle),
        }
    }

    /// `ρ → U ρ U†` for a single-qubit `U`.
    pub fn apply_1q(&mut self, qubit: usize, u: [[C<T>; 2]; 2]) {
        let (d, bit) = (self.dim, 1 << qubit);
        for col in 0..d {
            for row in 0..d {
                if row & bit == 0 {
                    let (a0, a1) = (self.data[row * d + col], self.data[(row | bit) * d + col]);
                    self.data[row * d + col] = u[0][0] * a0 + u[0][1] * a1;
                    self.data[(row | bit) * d + col] = u[1][0] * a0 + u[1][1] * a1;
                }
            }
        }
        let (c00, c01, c10, c11) = (u[0][0].conj(), u[0][1].conj(), u[1][0].conj(), u[1][1].conj());
        for row in 0..d {
            let r = &mut self.data[row * d..(row + 1) * d];
            for col in 0..d {
                if col & bit == 0 {
                    let (a0, a1) = (r[col], r[col | bit]);
                    r[col] = a0 * c00 + a1 * c01;
                    r[col | bit] = a0 * c10 + a1 * c11;
                }
            }
        }
    }

    pub fn apply_rz(&mut self, qubit: usize, angle: f64) {
        let (p0, p1) = rz_phases::<T>(angle);
        let bit = 1 << qubit;
        // ρ_ij picks up phase(i) · conj(phase(j))
        let up = p0 * p1.conj();
        let down = p1 * p0.conj();
        let d = self.dim;
        for row in 0..d {
            for col in 0..d {
                let f = match (row & bit != 0, col & bit != 0) {
                    (false, false) | (true, true) => continue,
                    (false, true) => up,
                    (true, false) => down,
                };
                self.data[row * d + col] *= f;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cb, tb, d) = (1 << control, 1 << target, self.dim);
        let perm = |i: usize| if i & cb != 0 { i ^ tb } else { i };
        // rows
        for row in 0..d {
            let p = perm(row);
            if p > row {
                for col in 0..d {
                    self.data.swap(row * d + col, p * d + col);
                }
            }
        }
        // columns
        for row in 0..d {
            let r = &mut self.data[row * d..(row + 1) * d];
            for col in 0..d {
                let p = perm(col);
                if p > col {
                    r.swap(col, p);
                }
            }
        }
    }

    /// Depolarizing channel on `qubits`: the reduced state on those qubits is
    /// replaced by `(1 − λ)ρ + λ Tr_q[ρ] ⊗ I / 2^{n_q}`.
    pub fn apply_depolarizing(&mut self, qubits: &[usize], lambda: T) -> Result<()> {
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidProbability { name: "lambda", value: lambda.to_f64_lossy() });
        }
        if qubits.is_empty() || qubits.len() > 2 {
            return Err(Error::InvalidArgument("depolarizing acts on one or two qubits".into()));
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::QubitOutOfRange { index: q, num_qubits: self.num_qubits });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidArgument("depolarizing qubits must be distinct".into()));
        }
        if lambda == T::zero() {
            return Ok(());
        }
        let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        // all subsets of `mask`
        let subs: Vec<usize> = {
            let mut v = vec![0];
            for &q in qubits {
                let b = 1 << q;
                v.extend(v.clone().into_iter().map(|s| s | b));
            }
            v
        };
        let keep = T::one() - lambda;
        let mix = lambda / T::of_usize(subs.len());
        let d = self.dim;
        for row in (0..d).filter(|r| r & mask == 0) {
            for col in (0..d).filter(|c| c & mask == 0) {
                let tr = subs
                    .iter()
                    .fold(C::new(T::zero(), T::zero()), |acc, &s| acc + self.data[(row | s) * d + (col | s)]);
                for &a in &subs {
                    for &b in &subs {
                        let idx = (row | a) * d + (col | b);
                        let mut v = self.data[idx] * keep;
                        if a == b {
                            v += tr * mix;
                        }
                        self.data[idx] = v;
                    }
                }
            }
        }
        Ok(())
    }

    /// `Tr[ρ P]`.
    pub fn expectation(&self, obs: &PauliObservable) -> T {
        let (x, z, y) = obs.masks();
        let phase = i_power::<T>(y);
        let d = self.dim;
        let mut acc = C::new(T::zero(), T::zero());
        for b in 0..d {
            let sign = if (b & z).count_ones() % 2 == 0 { T::one() } else { -T::one() };
            acc += self.data[b * d + (b ^ x)] * phase * sign;
        }
        acc.re
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).fold(C::new(T::zero(), T::zero()), |acc, i| acc + self.entry(i, i))
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Checks trace and Hermiticity against `tol`.
    pub fn check_invariants(&self, tol: T) -> Result<()> {
        let tr = self.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr}")));
        }
        let h = self.hermiticity_error();
        if h > tol {
            return Err(Error::InvalidArgument(format!("density matrix not hermitian ({h})")));
        }
        Ok(())
    }
}
