//! Circuits over the native gate set `{CNOT, √X, RZ(θ)}` and the structural
//! transformations used by the mitigation pipelines.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

/// Tolerance used when validating user-supplied Clifford angles.
pub const CLIFFORD_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Cnot,
    SqrtX,
    Rz,
}

/// A native gate. RZ angles are normalized to `[0, 2π)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRecord", into = "GateRecord")]
pub enum Gate {
    Cnot { control: usize, target: usize },
    SqrtX { qubit: usize },
    Rz { qubit: usize, angle: f64 },
}

/// Wire form of a gate: `{kind, qubits, angle?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GateRecord {
    kind: GateKind,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(r: GateRecord) -> Result<Self> {
        match (r.kind, r.qubits.as_slice(), r.angle) {
            (GateKind::Cnot, &[c, t], None) => Gate::cnot(c, t),
            (GateKind::SqrtX, &[q], None) => Ok(Gate::sqrt_x(q)),
            (GateKind::Rz, &[q], Some(a)) => Gate::rz(q, a),
            (kind, qs, angle) => Err(Error::InvalidGate(format!(
                "{kind:?} with qubits {qs:?} and angle {angle:?}"
            ))),
        }
    }
}

impl From<Gate> for GateRecord {
    fn from(g: Gate) -> Self {
        match g {
            Gate::Cnot { control, target } => {
                GateRecord { kind: GateKind::Cnot, qubits: vec![control, target], angle: None }
            }
            Gate::SqrtX { qubit } => GateRecord { kind: GateKind::SqrtX, qubits: vec![qubit], angle: None },
            Gate::Rz { qubit, angle } => {
                GateRecord { kind: GateKind::Rz, qubits: vec![qubit], angle: Some(angle) }
            }
        }
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        if control == target {
            return Err(Error::InvalidGate(format!("CNOT on a single qubit {control}")));
        }
        Ok(Gate::Cnot { control, target })
    }

    pub fn sqrt_x(qubit: usize) -> Self {
        Gate::SqrtX { qubit }
    }

    pub fn rz(qubit: usize, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidGate(format!("non-finite RZ angle {angle}")));
        }
        Ok(Gate::Rz { qubit, angle: normalize_angle(angle) })
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::SqrtX { .. } => GateKind::SqrtX,
            Gate::Rz { .. } => GateKind::Rz,
        }
    }

    pub fn max_qubit(&self) -> usize {
        match *self {
            Gate::Cnot { control, target } => control.max(target),
            Gate::SqrtX { qubit } | Gate::Rz { qubit, .. } => qubit,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn is_clifford(&self, tol: f64) -> bool {
        self.angle().is_none_or(|a| is_clifford_angle(a, tol))
    }
}

/// True iff `angle` lies within `tol` of a multiple of π/2.
pub fn is_clifford_angle(angle: f64, tol: f64) -> bool {
    let r = angle.rem_euclid(FRAC_PI_2);
    r.min(FRAC_PI_2 - r) <= tol
}

/// An ordered gate list on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRecord")]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct CircuitRecord {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(r: CircuitRecord) -> Result<Self> {
        Circuit::new(r.num_qubits, r.gates)
    }
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("a circuit needs at least one qubit".into()));
        }
        if let Some(g) = gates.iter().find(|g| g.max_qubit() >= num_qubits) {
            return Err(Error::QubitOutOfRange { index: g.max_qubit(), num_qubits });
        }
        Ok(Self { num_qubits, gates })
    }

    pub fn empty(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Vec::new())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    /// Positions of all RZ gates, in circuit order.
    pub fn rz_positions(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind() == GateKind::Rz)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn non_clifford_count(&self, tol: f64) -> usize {
        self.gates.iter().filter(|g| !g.is_clifford(tol)).count()
    }

    /// Stable 64-bit fingerprint of the gate list (angles by bit pattern).
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.num_qubits.hash(&mut h);
        for g in &self.gates {
            match *g {
                Gate::Cnot { control, target } => (0u8, control, target).hash(&mut h),
                Gate::SqrtX { qubit } => (1u8, qubit).hash(&mut h),
                Gate::Rz { qubit, angle } => (2u8, qubit, angle.to_bits()).hash(&mut h),
            }
        }
        h.finish()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Replaces the angle of every RZ gate with `f(position, angle)`.
    pub fn map_angles(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let gates = self
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| match *g {
                Gate::Rz { qubit, angle } => Gate::rz(qubit, f(i, angle)),
                other => Ok(other),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { num_qubits: self.num_qubits, gates })
    }
}

/// RZ positions eligible for Clifford substitution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordMask {
    replaceable: Vec<usize>,
    kept_non_clifford: usize,
}

impl CliffordMask {
    pub fn new(circuit: &Circuit, mut positions: Vec<usize>) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        for &p in &positions {
            match circuit.gates().get(p) {
                Some(Gate::Rz { .. }) => {}
                _ => return Err(Error::InvalidMask(format!("position {p} is not an RZ gate"))),
            }
        }
        let kept = circuit.count(GateKind::Rz) - positions.len();
        Ok(Self { replaceable: positions, kept_non_clifford: kept })
    }

    pub fn empty() -> Self {
        Self { replaceable: Vec::new(), kept_non_clifford: 0 }
    }

    /// A uniformly random mask leaving `keep` RZ gates unconstrained.
    pub fn random<R: Rng + ?Sized>(circuit: &Circuit, keep: usize, rng: &mut R) -> Result<Self> {
        let rz = circuit.rz_positions();
        if keep > rz.len() {
            return Err(Error::InvalidMask(format!(
                "cannot keep {keep} of {} RZ gates",
                rz.len()
            )));
        }
        let chosen = index::sample(rng, rz.len(), rz.len() - keep);
        let positions = chosen.into_iter().map(|i| rz[i]).collect();
        Self::new(circuit, positions)
    }

    pub fn positions(&self) -> &[usize] {
        &self.replaceable
    }

    pub fn len(&self) -> usize {
        self.replaceable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replaceable.is_empty()
    }

    pub fn kept_non_clifford(&self) -> usize {
        self.kept_non_clifford
    }
}

/// Replaces the masked RZ angles by the given multiples of π/2.
pub fn substitute_cliffords(circuit: &Circuit, mask: &CliffordMask, assignment: &[f64]) -> Result<Circuit> {
    if assignment.len() != mask.len() {
        return Err(Error::AssignmentLength { expected: mask.len(), got: assignment.len() });
    }
    let mut gates = circuit.gates().to_vec();
    for (&pos, &angle) in mask.positions().iter().zip(assignment) {
        if !angle.is_finite() || !is_clifford_angle(angle, CLIFFORD_ANGLE_TOL) {
            return Err(Error::NotClifford(angle));
        }
        let power = (normalize_angle(angle) / FRAC_PI_2).round() as u8 % 4;
        match gates.get_mut(pos) {
            Some(Gate::Rz { angle, .. }) => *angle = clifford_angle(power),
            _ => return Err(Error::InvalidMask(format!("position {pos} is not an RZ gate"))),
        }
    }
    Circuit::new(circuit.num_qubits(), gates)
}

/// `power · π/2` for `power ∈ {0, 1, 2, 3}`.
pub fn clifford_angle(power: u8) -> f64 {
    f64::from(power % 4) * FRAC_PI_2
}

/// Replaces each CNOT by `2k − 1` consecutive copies.
pub fn fold_cnots(circuit: &Circuit, k: usize) -> Result<Circuit> {
    if k < 1 {
        return Err(Error::InvalidNoiseLevel(k));
    }
    let reps = 2 * k - 1;
    let mut gates = Vec::with_capacity(circuit.len() + circuit.count(GateKind::Cnot) * (reps - 1));
    for g in circuit.gates() {
        match g {
            Gate::Cnot { .. } => gates.extend(std::iter::repeat_n(*g, reps)),
            _ => gates.push(*g),
        }
    }
    Circuit::new(circuit.num_qubits(), gates)
}

/// Adds `scale · u` to every RZ angle, with `u ~ U[−1, 1]` drawn per gate
/// from the stream of `seed`. For a fixed seed the perturbation direction is
/// fixed, so the family is continuous in `scale`.
pub fn perturb_angles(circuit: &Circuit, scale: f64, seed: u64) -> Result<Circuit> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("perturbation scale {scale}")));
    }
    let mut rng: StreamRng = stream(seed, &[0x7065_7274]);
    circuit.map_angles(|_, a| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        a + scale * u
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample_circuit() -> Circuit {
        Circuit::new(
            3,
            vec![
                Gate::rz(0, 0.7).unwrap(),
                Gate::sqrt_x(0),
                Gate::cnot(0, 1).unwrap(),
                Gate::rz(1, 1.1).unwrap(),
                Gate::cnot(1, 2).unwrap(),
                Gate::rz(2, -0.4).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn clifford_angles() {
        assert!(is_clifford_angle(FRAC_PI_2, 1e-9));
        assert!(!is_clifford_angle(0.3, 1e-9));
        assert!(is_clifford_angle(FRAC_PI_2 + 1e-10, 1e-9));
        assert!(is_clifford_angle(-1e-12, 1e-9));
        assert!(is_clifford_angle(3.0 * FRAC_PI_2 - 1e-10, 1e-9));
        assert!(!is_clifford_angle(PI / 4.0, 1e-9));
    }

    #[test]
    fn angles_are_normalized() {
        let g = Gate::rz(0, -FRAC_PI_2).unwrap();
        assert!((g.angle().unwrap() - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!(Gate::rz(0, TAU).unwrap().angle(), Some(0.0));
        assert!(Gate::rz(0, f64::NAN).is_err());
        assert!(Gate::cnot(1, 1).is_err());
    }

    #[test]
    fn circuit_rejects_out_of_range_qubits() {
        assert!(matches!(
            Circuit::new(2, vec![Gate::cnot(0, 2).unwrap()]),
            Err(Error::QubitOutOfRange { index: 2, num_qubits: 2 })
        ));
    }

    #[test]
    fn single_substitution() {
        let c = Circuit::new(1, vec![Gate::rz(0, 0.7).unwrap(), Gate::sqrt_x(0)]).unwrap();
        let mask = CliffordMask::new(&c, vec![0]).unwrap();
        let out = substitute_cliffords(&c, &mask, &[FRAC_PI_2]).unwrap();
        assert_eq!(out.gates()[0], Gate::rz(0, FRAC_PI_2).unwrap());
        assert_eq!(out.gates()[1], c.gates()[1]);
    }

    #[test]
    fn empty_mask_is_identity() {
        let c = sample_circuit();
        assert_eq!(substitute_cliffords(&c, &CliffordMask::empty(), &[]).unwrap(), c);
    }

    #[test]
    fn substitution_errors() {
        let c = sample_circuit();
        let mask = CliffordMask::new(&c, vec![0, 3]).unwrap();
        assert!(matches!(
            substitute_cliffords(&c, &mask, &[0.0]),
            Err(Error::AssignmentLength { expected: 2, got: 1 })
        ));
        assert!(matches!(substitute_cliffords(&c, &mask, &[0.0, 0.3]), Err(Error::NotClifford(_))));
        assert!(CliffordMask::new(&c, vec![1]).is_err());
    }

    #[test]
    fn mask_keeps_ten_of_one_fifty() {
        let mut rng = stream(3, &[]);
        let gates: Vec<Gate> = (0..150)
            .map(|i| Gate::rz(i % 4, 0.1 + 0.01 * i as f64).unwrap())
            .collect();
        let c = Circuit::new(4, gates).unwrap();
        assert_eq!(c.non_clifford_count(1e-9), 150);
        let mask = CliffordMask::random(&c, 10, &mut rng).unwrap();
        assert_eq!(mask.len(), 140);
        assert_eq!(mask.kept_non_clifford(), 10);
        let assignment: Vec<f64> = (0..140).map(|i| clifford_angle(i as u8)).collect();
        let out = substitute_cliffords(&c, &mask, &assignment).unwrap();
        assert_eq!(out.non_clifford_count(1e-9), 10);
        assert_eq!(out.len(), c.len());
    }

    #[test]
    fn folding_counts() {
        let c = sample_circuit();
        assert_eq!(fold_cnots(&c, 1).unwrap(), c);
        let f = fold_cnots(&c, 3).unwrap();
        assert_eq!(f.count(GateKind::Cnot), 10);
        assert_eq!(f.count(GateKind::Rz), 3);
        assert!(matches!(fold_cnots(&c, 0), Err(Error::InvalidNoiseLevel(0))));
        // folded copies are adjacent
        assert_eq!(&f.gates()[2..7], &[Gate::cnot(0, 1).unwrap(); 5]);
    }

    #[test]
    fn fold_sixty_cnots_at_level_ten() {
        let gates: Vec<Gate> = (0..60).map(|i| Gate::cnot(i % 6, (i + 1) % 6).unwrap()).collect();
        let c = Circuit::new(6, gates).unwrap();
        assert_eq!(fold_cnots(&c, 10).unwrap().count(GateKind::Cnot), 1140);
    }

    #[test]
    fn perturbation_contract() {
        let c = sample_circuit();
        assert_eq!(perturb_angles(&c, 0.0, 5).unwrap(), c);
        let a = perturb_angles(&c, 0.1, 5).unwrap();
        let b = perturb_angles(&c, 0.1, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (g, h) in a.gates().iter().zip(c.gates()) {
            assert_eq!(g.kind(), h.kind());
            if let (Some(x), Some(y)) = (g.angle(), h.angle()) {
                let d = (x - y).rem_euclid(TAU);
                assert!(d.min(TAU - d) <= 0.1 + 1e-12);
            }
        }
        assert!(perturb_angles(&c, -1.0, 5).is_err());
    }

    #[test]
    fn json_wire_format() {
        let c = Circuit::new(2, vec![Gate::cnot(0, 1).unwrap(), Gate::rz(1, 0.25).unwrap()]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(v["num_qubits"], 2);
        assert_eq!(v["gates"][0]["kind"], "CNOT");
        assert_eq!(v["gates"][0]["qubits"], serde_json::json!([0, 1]));
        assert!(v["gates"][0].get("angle").is_none());
        assert_eq!(v["gates"][1]["kind"], "RZ");
        assert_eq!(v["gates"][1]["angle"], 0.25);
        let bad = r#"{"num_qubits":1,"gates":[{"kind":"RZ","qubits":[0]}]}"#;
        assert!(Circuit::from_json(bad).is_err());
        let oob = r#"{"num_qubits":1,"gates":[{"kind":"SQRT_X","qubits":[3]}]}"#;
        assert!(Circuit::from_json(oob).is_err());
    }
}
