use num_complex::Complex;

use crate::circuit::{Circuit, Gate};
use crate::scalar::Real;
use crate::sim::pauli::PauliObservable;

type C<T> = Complex<T>;

/// The 2×2 matrix of `√X`.
pub fn sqrt_x_matrix<T: Real>() -> [[C<T>; 2]; 2] {
    let h = T::half();
    let p = C::new(h, h);
    let m = C::new(h, -h);
    [[p, m], [m, p]]
}

pub(crate) fn dagger<T: Real>(m: [[C<T>; 2]; 2]) -> [[C<T>; 2]; 2] {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

/// `(e^{-iθ/2}, e^{iθ/2})`, the diagonal of `RZ(θ)`.
pub fn rz_phases<T: Real>(angle: f64) -> (C<T>, C<T>) {
    let h = T::of(angle) * T::half();
    (C::new(h.cos(), -h.sin()), C::new(h.cos(), h.sin()))
}

/// Pure state on `n` qubits; qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    num_qubits: usize,
    amps: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut amps = vec![C::new(T::zero(), T::zero()); 1 << num_qubits];
        amps[0] = C::new(T::one(), T::zero());
        Self { num_qubits, amps }
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<C<T>>) -> Self {
        assert_eq!(amps.len(), 1 << num_qubits, "amplitude count must be 2^n");
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn run(circuit: &Circuit) -> Self {
        let mut s = Self::zero_state(circuit.num_qubits());
        for g in circuit.gates() {
            s.apply(g);
        }
        s
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::SqrtX { qubit } => self.apply_1q(qubit, sqrt_x_matrix()),
            Gate::Rz { qubit, angle } => self.apply_rz(qubit, angle),
        }
    }

    /// Applies the inverse of `gate`.
    pub fn apply_inverse(&mut self, gate: &Gate) {
        match *gate {
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::SqrtX { qubit } => self.apply_1q(qubit, dagger(sqrt_x_matrix())),
            Gate::Rz { qubit, angle } => self.apply_rz(qubit, -angle),
        }
    }

    pub fn apply_rz(&mut self, qubit: usize, angle: f64) {
        let (p0, p1) = rz_phases::<T>(angle);
        let bit = 1 << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { p0 } else { p1 };
        }
    }

    pub fn apply_1q(&mut self, qubit: usize, m: [[C<T>; 2]; 2]) {
        let bit = 1 << qubit;
        for chunk in self.amps.chunks_exact_mut(2 * bit) {
            let (lo, hi) = chunk.split_at_mut(bit);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    /// Overwrites `self` with `other` without reallocating.
    pub fn copy_from(&mut self, other: &Self) {
        self.num_qubits = other.num_qubits;
        self.amps.clear();
        self.amps.extend_from_slice(&other.amps);
    }

    /// Multiplies the `qubit` component by `-i Z / 2`, the generator of `RZ`.
    pub fn apply_rz_generator(&mut self, qubit: usize) {
        let bit = 1 << qubit;
        let h = T::half();
        for (i, a) in self.amps.iter_mut().enumerate() {
            let s = if i & bit == 0 { h } else { -h };
            *a = C::new(a.im * s, -a.re * s);
        }
    }

    /// `P|ψ⟩` for a Pauli string.
    pub fn apply_pauli(&self, obs: &PauliObservable) -> Self {
        let (x, z, y) = obs.masks();
        let phase = i_power::<T>(y);
        let mut out = vec![C::new(T::zero(), T::zero()); self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let sign = if (b & z).count_ones() % 2 == 0 { T::one() } else { -T::one() };
            out[b ^ x] = a * phase * sign;
        }
        Self { num_qubits: self.num_qubits, amps: out }
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, obs: &PauliObservable) -> T {
        let (x, z, y) = obs.masks();
        let phase = i_power::<T>(y);
        let mut acc = C::new(T::zero(), T::zero());
        for (b, &a) in self.amps.iter().enumerate() {
            let sign = if (b & z).count_ones() % 2 == 0 { T::one() } else { -T::one() };
            acc += self.amps[b ^ x].conj() * a * phase * sign;
        }
        acc.re
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

pub(crate) fn i_power<T: Real>(k: u32) -> C<T> {
    match k % 4 {
        0 => C::new(T::one(), T::zero()),
        1 => C::new(T::zero(), T::one()),
        2 => C::new(-T::one(), T::zero()),
        _ => C::new(T::zero(), -T::one()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::pauli::Pauli;

    #[test]
    fn sqrt_x_squares_to_x() {
        let mut s = StateVector::<f64>::zero_state(1);
        s.apply(&Gate::sqrt_x(0));
        s.apply(&Gate::sqrt_x(0));
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_undoes_gates() {
        let gates = [Gate::sqrt_x(0), Gate::rz(1, 0.3).unwrap(), Gate::cnot(0, 1).unwrap()];
        let mut s = StateVector::<f64>::zero_state(2);
        s.apply(&Gate::sqrt_x(1));
        let start = s.clone();
        for g in &gates {
            s.apply(g);
        }
        for g in gates.iter().rev() {
            s.apply_inverse(g);
        }
        for (a, b) in s.amplitudes().iter().zip(start.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn pauli_y_phase() {
        // Y|0> = i|1>
        let s = StateVector::<f64>::zero_state(1);
        let y = s.apply_pauli(&PauliObservable::single(0, Pauli::Y));
        assert!((y.amplitudes()[1] - C::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn bell_correlations() {
        let mut s = StateVector::<f64>::zero_state(2);
        // sqrt(X) then RZ-free Bell-like state: <Z0 Z1> = 1 after CNOT
        s.apply(&Gate::sqrt_x(0));
        s.apply(&Gate::cnot(0, 1).unwrap());
        assert!((s.expectation(&PauliObservable::zz(0, 1).unwrap()) - 1.0).abs() < 1e-15);
        assert!(s.expectation(&PauliObservable::single(0, Pauli::Z)).abs() < 1e-15);
    }
}
