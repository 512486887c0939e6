//! XY-model Hamiltonian, hardware-efficient ansatz, and the variational
//! ground-state preparation that produces the circuit of interest.

use std::f64::consts::TAU;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::sim::{exact_expectation, Pauli, PauliObservable, StateVector};

/// Real-weighted sum of Pauli strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    num_qubits: usize,
    terms: Vec<(f64, PauliObservable)>,
}

impl Hamiltonian {
    pub fn new(num_qubits: usize, terms: Vec<(f64, PauliObservable)>) -> Result<Self> {
        for (c, p) in &terms {
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient {c}")));
            }
            p.check_width(num_qubits)?;
        }
        Ok(Self { num_qubits, terms })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliObservable)] {
        &self.terms
    }

    /// `⟨ψ|H|ψ⟩` evaluated term by term.
    pub fn energy(&self, state: &StateVector<f64>) -> f64 {
        self.terms.iter().map(|(c, p)| c * state.expectation(p)).sum()
    }

    /// `H|ψ⟩`.
    pub fn apply(&self, state: &StateVector<f64>) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); state.amplitudes().len()];
        for (c, p) in &self.terms {
            for (o, a) in out.iter_mut().zip(state.apply_pauli(p).amplitudes()) {
                *o += a * *c;
            }
        }
        out
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<Complex<f64>>> {
        if self.num_qubits > 12 {
            return Err(Error::DimensionTooLarge(self.num_qubits));
        }
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::from_element(dim, dim, Complex::new(0.0, 0.0));
        for (c, p) in &self.terms {
            let (x, z, y) = p.masks();
            let phase = match y % 4 {
                0 => Complex::new(1.0, 0.0),
                1 => Complex::new(0.0, 1.0),
                2 => Complex::new(-1.0, 0.0),
                _ => Complex::new(0.0, -1.0),
            };
            for b in 0..dim {
                let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(b ^ x, b)] += phase * (sign * c);
            }
        }
        Ok(m)
    }
}

/// Nearest-neighbour `XᵢXⱼ + ZᵢZⱼ` on a chain, closed into a ring if `periodic`.
pub fn build_xy_hamiltonian(n: usize, periodic: bool) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("XY chain needs at least 2 sites, got {n}")));
    }
    let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if periodic && n > 2 {
        bonds.push((n - 1, 0));
    }
    let mut terms = Vec::with_capacity(2 * bonds.len());
    for (i, j) in bonds {
        terms.push((1.0, PauliObservable::new([(i, Pauli::X), (j, Pauli::X)])?));
        terms.push((1.0, PauliObservable::new([(i, Pauli::Z), (j, Pauli::Z)])?));
    }
    Hamiltonian::new(n, terms)
}

/// Smallest eigenvalue by dense diagonalization (≤ 12 qubits).
pub fn exact_ground_energy(h: &Hamiltonian) -> Result<f64> {
    let m = h.to_dense()?;
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Single-qubit block of the ansatz, written in native gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationBlock {
    /// `RZ–√X–RZ`.
    Short,
    /// `RZ–√X–RZ–√X–RZ`, the native form of a general single-qubit unitary.
    #[default]
    Euler,
}

impl RotationBlock {
    pub fn rz_count(self) -> usize {
        match self {
            Self::Short => 2,
            Self::Euler => 3,
        }
    }
}

/// Layered ansatz: per layer a rotation block on every qubit followed by a
/// ring of CNOTs `(q → q+1 mod n)`, with an optional closing rotation block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub num_qubits: usize,
    pub layers: usize,
    #[serde(default = "yes")]
    pub final_rotations: bool,
    #[serde(default)]
    pub block: RotationBlock,
}

fn yes() -> bool {
    true
}

impl AnsatzSpec {
    pub fn new(num_qubits: usize, layers: usize) -> Self {
        Self { num_qubits, layers, final_rotations: true, block: RotationBlock::Euler }
    }

    pub fn with_block(self, block: RotationBlock) -> Self {
        Self { block, ..self }
    }

    fn rotation_blocks(&self) -> usize {
        self.layers + usize::from(self.final_rotations)
    }

    pub fn num_params(&self) -> usize {
        self.rotation_blocks() * self.num_qubits * self.block.rz_count()
    }

    pub fn cnot_count(&self) -> usize {
        self.layers * self.num_qubits
    }

    pub fn circuit(&self, params: &[f64]) -> Result<Circuit> {
        if params.len() != self.num_params() {
            return Err(Error::InvalidArgument(format!(
                "ansatz takes {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        if self.num_qubits < 2 {
            return Err(Error::InvalidArgument("ansatz needs at least 2 qubits".into()));
        }
        let n = self.num_qubits;
        let mut gates = Vec::with_capacity(self.rotation_blocks() * 5 * n + self.cnot_count());
        let mut p = params.iter();
        for block in 0..self.rotation_blocks() {
            for q in 0..n {
                gates.push(Gate::rz(q, *p.next().unwrap())?);
                for _ in 1..self.block.rz_count() {
                    gates.push(Gate::sqrt_x(q));
                    gates.push(Gate::rz(q, *p.next().unwrap())?);
                }
            }
            if block < self.layers {
                for q in 0..n {
                    gates.push(Gate::cnot(q, (q + 1) % n)?);
                }
            }
        }
        Circuit::new(n, gates)
    }
}

/// Energy and its gradient with respect to every RZ angle, in gate order,
/// by reverse-mode (adjoint) differentiation.
pub fn energy_and_gradient(h: &Hamiltonian, circuit: &Circuit) -> (f64, Vec<f64>) {
    let mut psi = StateVector::<f64>::run(circuit);
    let energy = h.energy(&psi);
    let mut lam = StateVector::from_amplitudes(circuit.num_qubits(), h.apply(&psi));
    let mut grad = Vec::with_capacity(circuit.count(GateKind::Rz));
    for g in circuit.gates().iter().rev() {
        if let Gate::Rz { qubit, .. } = *g {
            let mut d = psi.clone();
            d.apply_rz_generator(qubit);
            grad.push(2.0 * lam.inner(&d).re);
        }
        psi.apply_inverse(g);
        lam.apply_inverse(g);
    }
    grad.reverse();
    (energy, grad)
}

/// Limited-memory BFGS with Armijo backtracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self { memory: 12, max_iters: 6000, grad_tol: 1e-10 }
    }
}

pub fn lbfgs_minimize(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    settings: &LbfgsSettings,
    stop_below: f64,
) -> (Vec<f64>, f64) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    for _ in 0..settings.max_iters {
        if fx <= stop_below || dot(&g, &g).sqrt() <= settings.grad_tol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = f(&xn);
            if fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == settings.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    (x, fx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub circuit: Circuit,
    pub params: Vec<f64>,
    pub energy: f64,
    pub exact_energy: f64,
    pub residual: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundStateSettings {
    pub max_restarts: usize,
    pub lbfgs: LbfgsSettings,
}

impl Default for GroundStateSettings {
    fn default() -> Self {
        Self { max_restarts: 40, lbfgs: LbfgsSettings::default() }
    }
}

/// Variationally prepares the ground state of `h`, restarting from fresh
/// random angles until the energy residual is at most `tol`.
pub fn optimize_ground_state(
    h: &Hamiltonian,
    ansatz: &AnsatzSpec,
    tol: f64,
    seed: u64,
    settings: &GroundStateSettings,
) -> Result<GroundStateResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if ansatz.num_qubits != h.num_qubits() {
        return Err(Error::InvalidArgument("ansatz and hamiltonian widths differ".into()));
    }
    let exact = exact_ground_energy(h)?;
    let cost = |p: &[f64]| -> (f64, Vec<f64>) {
        let c = ansatz.circuit(p).expect("parameter count is fixed");
        energy_and_gradient(h, &c)
    };
    let mut best: Option<GroundStateResult> = None;
    for restart in 0..settings.max_restarts.max(1) {
        let mut rng = stream(seed, &[restart as u64]);
        let x0: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        let (x, _) = if tol.is_infinite() {
            (x0, f64::NAN)
        } else {
            lbfgs_minimize(cost, x0, &settings.lbfgs, exact + 0.1 * tol)
        };
        let circuit = ansatz.circuit(&x)?;
        let energy = h.energy(&StateVector::run(&circuit));
        let residual = energy - exact;
        let result = GroundStateResult {
            circuit,
            params: x,
            energy,
            exact_energy: exact,
            residual,
            restarts: restart + 1,
        };
        if residual <= tol {
            return Ok(result);
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(result);
        }
    }
    Err(Error::GroundStateNotConverged {
        tol,
        best_residual: best.map_or(f64::INFINITY, |b| b.residual),
    })
}

/// A family member: circuit and its exact expectation value.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub circuit: Circuit,
    pub exact: f64,
    /// Seed of the random kick used when the expectation was stationary.
    pub seed: u64,
    /// Root-mean-square RZ angle change relative to the base circuit.
    pub scale: f64,
}

fn rz_angles(c: &Circuit) -> Vec<f64> {
    c.gates()
        .iter()
        .filter_map(|g| match *g {
            Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        })
        .collect()
}

fn with_rz_angles(c: &Circuit, angles: &[f64]) -> Result<Circuit> {
    let mut k = 0;
    c.map_angles(|_, _| {
        k += 1;
        angles[k - 1]
    })
}

/// Retunes the RZ angles of `base` to obtain `count` circuits whose exact
/// expectations form an even grid from `⟨O⟩_base` to `−⟨O⟩_base`.
///
/// Members are found by continuation: member `j` minimizes
/// `(⟨O⟩ − t_j)²` by L-BFGS starting from the angles of member `j − 1`, so
/// consecutive members differ by small angle changes. Member 0 is `base`.
pub fn transfer_family(
    base: &Circuit,
    obs: &PauliObservable,
    count: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<FamilyMember>> {
    if count < 2 {
        return Err(Error::InvalidArgument("transfer family needs at least 2 members".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("transfer family tolerance must be positive".into()));
    }
    let e0 = exact_expectation(base, obs)?;
    let h = Hamiltonian::new(base.num_qubits(), vec![(1.0, obs.clone())])?;
    let theta0 = rz_angles(base);
    let settings = LbfgsSettings { grad_tol: 0.0, ..Default::default() };
    let mut members = vec![FamilyMember { circuit: base.clone(), exact: e0, seed, scale: 0.0 }];
    let mut theta = theta0.clone();
    for j in 1..count {
        let t = e0 - 2.0 * e0 * j as f64 / (count - 1) as f64;
        let cost = |x: &[f64]| -> (f64, Vec<f64>) {
            let c = with_rz_angles(base, x).expect("angle count is fixed");
            let (v, g) = energy_and_gradient(&h, &c);
            let r = v - t;
            ((r * r), g.into_iter().map(|gi| 2.0 * r * gi).collect())
        };
        let mut reached = None;
        for attempt in 0..4u64 {
            let mut x0 = theta.clone();
            if attempt > 0 {
                // stationary start: kick off the critical point
                let mut rng = stream(seed, &[j as u64, attempt]);
                x0.iter_mut().for_each(|x| *x += 1e-2 * rng.random_range(-1.0..1.0));
            }
            let (x, _) = lbfgs_minimize(cost, x0, &settings, tol * tol);
            let c = with_rz_angles(base, &x)?;
            let v = exact_expectation(&c, obs)?;
            if (v - t).abs() <= tol {
                reached = Some((x, c, v));
                break;
            }
        }
        let Some((x, circuit, exact)) = reached else {
            return Err(Error::InvalidArgument(format!("no angle setting reached target {t:.4}")));
        };
        let scale = (x.iter().zip(&theta0).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len().max(1) as f64).sqrt();
        theta = x;
        members.push(FamilyMember { circuit, exact, seed, scale });
    }
    Ok(members)
}
