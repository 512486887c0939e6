//! Exact simulation: noiseless statevectors, density matrices under the
//! depolarizing noise model, and binomial shot sampling.

pub mod density;
pub mod pauli;
pub mod statevector;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use density::DensityMatrix;
pub use pauli::{Pauli, PauliObservable};
pub use statevector::StateVector;

/// Depolarizing strengths per noisy gate class. RZ gates are noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub lambda_2q: f64,
    pub lambda_1q: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { lambda_2q: 3.2e-3, lambda_1q: 3.2e-4 }
    }
}

impl NoiseModel {
    pub fn new(lambda_2q: f64, lambda_1q: f64) -> Result<Self> {
        let m = Self { lambda_2q, lambda_1q };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless() -> Self {
        Self { lambda_2q: 0.0, lambda_1q: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("lambda_2q", self.lambda_2q), ("lambda_1q", self.lambda_1q)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Noiseless `⟨ψ|O|ψ⟩` from `|0…0⟩`.
pub fn exact_expectation(circuit: &Circuit, obs: &PauliObservable) -> Result<f64> {
    exact_expectation_in::<f64>(circuit, obs)
}

pub fn exact_expectation_in<T: Real>(circuit: &Circuit, obs: &PauliObservable) -> Result<T> {
    obs.check_width(circuit.num_qubits())?;
    Ok(StateVector::<T>::run(circuit).expectation(obs))
}

/// Runs `circuit` on a density matrix with the depolarizing channel inserted
/// before every CNOT and √X.
pub fn run_noisy<T: Real>(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix<T>> {
    noise.validate()?;
    let mut rho = DensityMatrix::<T>::zero_state(circuit.num_qubits());
    let (l2, l1) = (T::of(noise.lambda_2q), T::of(noise.lambda_1q));
    for g in circuit.gates() {
        match *g {
            Gate::Cnot { control, target } => rho.apply_depolarizing(&[control, target], l2)?,
            Gate::SqrtX { qubit } => rho.apply_depolarizing(&[qubit], l1)?,
            Gate::Rz { .. } => {}
        }
        rho.apply(g);
    }
    debug_assert!(rho.check_invariants(T::of(density::DENSITY_TOL)).is_ok());
    Ok(rho)
}

/// `Tr[ρ O]` for the noisy final state.
pub fn noisy_expectation(circuit: &Circuit, obs: &PauliObservable, noise: &NoiseModel) -> Result<f64> {
    obs.check_width(circuit.num_qubits())?;
    Ok(run_noisy::<f64>(circuit, noise)?.expectation(obs))
}

/// A finite-shot estimate `(n₊ − n₋)/shots` of a Pauli expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub value: f64,
    pub shots: u64,
    pub plus: u64,
}

impl ShotEstimate {
    pub fn from_counts(plus: u64, shots: u64) -> Self {
        let value = (2.0 * plus as f64 - shots as f64) / shots as f64;
        Self { value, shots, plus }
    }
}

/// Probability of the `+1` outcome for a Pauli with expectation `value`.
pub fn plus_probability(value: f64) -> Result<f64> {
    if !(value.abs() <= 1.0 + 1e-12) {
        return Err(Error::ExpectationOutOfRange(value));
    }
    Ok(((1.0 + value) / 2.0).clamp(0.0, 1.0))
}

/// Draws `n₊ ~ Binomial(shots, p_plus)` and returns the estimate.
pub fn sample_from_probability<R: Rng + ?Sized>(p_plus: f64, shots: u64, rng: &mut R) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p_plus) {
        return Err(Error::InvalidProbability { name: "p_plus", value: p_plus });
    }
    let plus = Binomial::new(shots, p_plus)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    Ok(ShotEstimate::from_counts(plus, shots))
}

/// Simulates `shots` single-shot ±1 measurements of a Pauli observable
/// whose true expectation is `true_value`.
pub fn sample_shot_estimate<R: Rng + ?Sized>(true_value: f64, shots: u64, rng: &mut R) -> Result<ShotEstimate> {
    sample_from_probability(plus_probability(true_value)?, shots, rng)
}

/// Whether noisy expectations are estimated from finite shots or used as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotNoise {
    #[default]
    Binomial,
    /// Infinite-shot limit; used by exactness tests.
    Off,
}

impl ShotNoise {
    pub fn estimate<R: Rng + ?Sized>(self, true_value: f64, shots: u64, rng: &mut R) -> Result<f64> {
        match self {
            ShotNoise::Binomial => Ok(sample_shot_estimate(true_value, shots, rng)?.value),
            ShotNoise::Off => Ok(true_value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn empty_circuit_and_sqrt_x() {
        let c = Circuit::empty(1).unwrap();
        assert_eq!(exact_expectation(&c, &PauliObservable::single(0, Pauli::Z)).unwrap(), 1.0);
        let c = Circuit::new(1, vec![Gate::sqrt_x(0)]).unwrap();
        assert!(exact_expectation(&c, &PauliObservable::single(0, Pauli::Z)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn observable_wider_than_circuit() {
        let c = Circuit::empty(2).unwrap();
        assert!(exact_expectation(&c, &PauliObservable::single(2, Pauli::Z)).is_err());
    }

    #[test]
    fn noisy_cnot_on_zero_state() {
        let c = Circuit::new(2, vec![Gate::cnot(0, 1).unwrap()]).unwrap();
        let noise = NoiseModel::new(3.2e-3, 0.0).unwrap();
        let v = noisy_expectation(&c, &PauliObservable::zz(0, 1).unwrap(), &noise).unwrap();
        assert!((v - 0.9968).abs() < 1e-12);
    }

    #[test]
    fn degenerate_binomial() {
        let mut rng = stream(1, &[]);
        for shots in [1, 17, 1000] {
            assert_eq!(sample_shot_estimate(1.0, shots, &mut rng).unwrap().value, 1.0);
            assert_eq!(sample_shot_estimate(-1.0, shots, &mut rng).unwrap().value, -1.0);
        }
    }

    #[test]
    fn shot_sampling_errors_and_determinism() {
        let mut rng = stream(1, &[]);
        assert!(sample_shot_estimate(1.5, 10, &mut rng).is_err());
        assert!(sample_shot_estimate(0.0, 0, &mut rng).is_err());
        let a = sample_shot_estimate(0.3, 1000, &mut stream(9, &[4])).unwrap();
        let b = sample_shot_estimate(0.3, 1000, &mut stream(9, &[4])).unwrap();
        assert_eq!(a, b);
        let values: Vec<f64> = (0..50).map(|_| sample_shot_estimate(0.3, 7, &mut rng).unwrap().value).collect();
        // estimates live on the grid (2 n_+ - shots) / shots
        assert!(values.iter().all(|v| ((v * 7.0 + 7.0) / 2.0).fract().abs() < 1e-12));
    }

    #[test]
    fn bad_noise_model() {
        assert!(NoiseModel::new(1.2, 0.0).is_err());
        assert!(NoiseModel::new(0.1, -0.1).is_err());
    }
}
