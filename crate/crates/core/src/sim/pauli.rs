use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// A tensor product of single-qubit Paulis; identity on unlisted qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliObservable {
    paulis: BTreeMap<usize, Pauli>,
}

impl PauliObservable {
    pub fn new(factors: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut paulis = BTreeMap::new();
        for (q, p) in factors {
            if paulis.insert(q, p).is_some() {
                return Err(Error::InvalidObservable(format!("qubit {q} listed twice")));
            }
        }
        if paulis.is_empty() {
            return Err(Error::InvalidObservable("observable has no non-identity factor".into()));
        }
        Ok(Self { paulis })
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self { paulis: BTreeMap::from([(qubit, p)]) }
    }

    /// `X_a X_b`, the two-site correlator.
    pub fn xx(a: usize, b: usize) -> Result<Self> {
        Self::new([(a, Pauli::X), (b, Pauli::X)])
    }

    pub fn zz(a: usize, b: usize) -> Result<Self> {
        Self::new([(a, Pauli::Z), (b, Pauli::Z)])
    }

    pub fn factors(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.paulis.iter().map(|(&q, &p)| (q, p))
    }

    pub fn max_qubit(&self) -> usize {
        *self.paulis.keys().next_back().expect("non-empty")
    }

    pub fn check_width(&self, num_qubits: usize) -> Result<()> {
        if self.max_qubit() >= num_qubits {
            return Err(Error::QubitOutOfRange { index: self.max_qubit(), num_qubits });
        }
        Ok(())
    }

    /// Bit masks `(x, z, y_count)` such that `P|b⟩ = i^y (−1)^{|b∧z|} |b⊕x⟩`.
    pub fn masks(&self) -> (usize, usize, u32) {
        let (mut x, mut z, mut y) = (0usize, 0usize, 0u32);
        for (&q, &p) in &self.paulis {
            match p {
                Pauli::X => x |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    y += 1;
                }
            }
        }
        (x, z, y)
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.paulis.iter().map(|(q, p)| format!("{p:?}{q}")).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for PauliObservable {
    type Err = Error;

    /// Parses `"X0 X3"`, `"Z1"`, `"X0*Y2"`.
    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .split(|c: char| c.is_whitespace() || c == '*')
            .filter(|t| !t.is_empty())
            .map(|tok| {
                let (p, q) = tok.split_at(1);
                let p = match p {
                    "X" | "x" => Pauli::X,
                    "Y" | "y" => Pauli::Y,
                    "Z" | "z" => Pauli::Z,
                    _ => return Err(Error::InvalidObservable(format!("bad factor {tok:?}"))),
                };
                let q = q
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidObservable(format!("bad qubit in {tok:?}")))?;
                Ok((q, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }
}

impl TryFrom<String> for PauliObservable {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PauliObservable> for String {
    fn from(p: PauliObservable) -> Self {
        p.to_string()
    }
}
