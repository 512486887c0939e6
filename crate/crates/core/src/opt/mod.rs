//! Robust design: bounded hyperparameter spaces, the evaluation ledger, and
//! two optimizers over noisy risk estimates (differential evolution and an
//! RBF-surrogate loop).

pub mod de;
pub mod rbf;
pub mod surrogate;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use de::{differential_evolution, DeSettings};
pub use rbf::ThinPlateRbf;
pub use surrogate::{fit_surrogate, random_search, surrogate_optimize, SurrogateModel, SurrogateSettings};

/// One coordinate of a search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dim {
    Continuous { lo: f64, hi: f64 },
    /// The integers `lo..=hi`.
    Integer { lo: i64, hi: i64 },
}

impl Dim {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Dim::Continuous { lo, hi } => (lo, hi),
            Dim::Integer { lo, hi } => (lo as f64, hi as f64),
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Dim::Integer { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDim {
    pub name: String,
    #[serde(flatten)]
    pub dim: Dim,
}

/// A box of continuous and integer coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NamedDim>", into = "Vec<NamedDim>")]
pub struct SearchSpace {
    dims: Vec<NamedDim>,
}

impl TryFrom<Vec<NamedDim>> for SearchSpace {
    type Error = Error;
    fn try_from(dims: Vec<NamedDim>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SearchSpace> for Vec<NamedDim> {
    fn from(s: SearchSpace) -> Self {
        s.dims
    }
}

/// A point of a [`SearchSpace`], in coordinate order.
pub type HyperParams = Vec<f64>;

impl SearchSpace {
    pub fn new(dims: Vec<NamedDim>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("search space has no coordinates".into()));
        }
        for d in &dims {
            let (lo, hi) = d.dim.bounds();
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("degenerate bounds [{lo}, {hi}] for {}", d.name)));
            }
        }
        Ok(Self { dims })
    }

    pub fn continuous(name: &str, lo: f64, hi: f64) -> NamedDim {
        NamedDim { name: name.into(), dim: Dim::Continuous { lo, hi } }
    }

    pub fn integer(name: &str, lo: i64, hi: i64) -> NamedDim {
        NamedDim { name: name.into(), dim: Dim::Integer { lo, hi } }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dims(&self) -> &[NamedDim] {
        &self.dims
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| d.dim.bounds()).collect()
    }

    /// Whether `x` lies in the box and integer coordinates are integers.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && self.dims.iter().zip(x).all(|(d, &v)| {
                let (lo, hi) = d.dim.bounds();
                v >= lo && v <= hi && (!d.dim.is_integer() || v.fract() == 0.0)
            })
    }

    /// Rounds integer coordinates to the nearest integer, then clamps every
    /// coordinate into its bounds.
    pub fn snap(&self, x: &[f64]) -> HyperParams {
        self.dims
            .iter()
            .zip(x)
            .map(|(d, &v)| {
                let (lo, hi) = d.dim.bounds();
                let v = if d.dim.is_integer() { v.round() } else { v };
                v.clamp(lo, hi)
            })
            .collect()
    }

    /// A uniformly random feasible point; integer coordinates are uniform on
    /// their sets.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HyperParams {
        self.dims
            .iter()
            .map(|d| match d.dim {
                Dim::Continuous { lo, hi } => rng.random_range(lo..=hi),
                Dim::Integer { lo, hi } => rng.random_range(lo..=hi) as f64,
            })
            .collect()
    }

    /// Affine map of the box onto the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(x)
            .map(|(d, &v)| {
                let (lo, hi) = d.dim.bounds();
                (v - lo) / (hi - lo)
            })
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(u)
            .map(|(d, &v)| {
                let (lo, hi) = d.dim.bounds();
                lo + v * (hi - lo)
            })
            .collect()
    }

    pub fn named(&self, x: &[f64]) -> BTreeMap<String, f64> {
        self.dims.iter().zip(x).map(|(d, &v)| (d.name.clone(), v)).collect()
    }
}

/// Whether the objective is minimized or maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    /// Maps a value to the internally minimized quantity.
    pub fn to_min(self, v: f64) -> f64 {
        match self {
            Direction::Minimize => v,
            Direction::Maximize => -v,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        self.to_min(a) < self.to_min(b)
    }
}

/// A noisy objective. `seed` keys the randomness of one evaluation.
pub trait Objective {
    fn evaluate(&mut self, params: &[f64], seed: u64) -> Result<f64>;

    /// Monte Carlo sample size behind one evaluation, for the ledger.
    fn sample_size(&self) -> usize {
        0
    }
}

impl<F: FnMut(&[f64], u64) -> Result<f64>> Objective for F {
    fn evaluate(&mut self, params: &[f64], seed: u64) -> Result<f64> {
        self(params, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub params: HyperParams,
    pub value: f64,
    pub sample_size: usize,
    pub seed: u64,
}

/// Append-only record of objective evaluations. No two records share both
/// params and seed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<EvalRecord>", into = "Vec<EvalRecord>")]
pub struct EvalLedger {
    records: Vec<EvalRecord>,
    keys: HashSet<(Vec<u64>, u64)>,
}

impl PartialEq for EvalLedger {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl TryFrom<Vec<EvalRecord>> for EvalLedger {
    type Error = Error;
    fn try_from(records: Vec<EvalRecord>) -> Result<Self> {
        let mut ledger = Self::new();
        for r in records {
            ledger.push(r)?;
        }
        Ok(ledger)
    }
}

impl From<EvalLedger> for Vec<EvalRecord> {
    fn from(l: EvalLedger) -> Self {
        l.records
    }
}

pub(crate) fn params_key(p: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl EvalLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: EvalRecord) -> Result<()> {
        if !self.keys.insert((params_key(&record.params), record.seed)) {
            return Err(Error::DuplicateRecord);
        }
        self.records.push(record);
        Ok(())
    }

    /// Whether some record was evaluated at exactly `params`.
    pub fn contains_params(&self, params: &[f64]) -> bool {
        let key = params_key(params);
        self.records.iter().any(|r| params_key(&r.params) == key)
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index of the best record; ties go to the earliest.
    pub fn best(&self, direction: Direction) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, r) in self.records.iter().enumerate() {
            if best.is_none_or(|b| direction.better(r.value, self.records[b].value)) {
                best = Some(i);
            }
        }
        best
    }

    /// Best value so far after each evaluation.
    pub fn trace(&self, direction: Direction) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let v = match out.last() {
                Some(&b) if !direction.better(r.value, b) => b,
                _ => r.value,
            };
            out.push(v);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRunResult {
    pub best_params: HyperParams,
    pub best_value: f64,
    /// Best-so-far value after each evaluation.
    pub trace: Vec<f64>,
    pub ledger: EvalLedger,
    /// Proposals that repeated an evaluated point and were jittered.
    #[serde(default)]
    pub jittered: usize,
    /// Repeated proposals replaced by a neighboring integer slice.
    #[serde(default)]
    pub stepped: usize,
}

impl OptRunResult {
    pub(crate) fn from_ledger(ledger: EvalLedger, direction: Direction) -> Result<Self> {
        let i = ledger.best(direction).ok_or(Error::EmptySample)?;
        let best = &ledger.records()[i];
        Ok(Self {
            best_params: best.params.clone(),
            best_value: best.value,
            trace: ledger.trace(direction),
            ledger,
            jittered: 0,
            stepped: 0,
        })
    }

    pub fn evaluations(&self) -> usize {
        self.ledger.len()
    }
}

/// Seed of evaluation `index` within a run seeded by `seed`.
pub fn evaluation_seed(seed: u64, index: usize) -> u64 {
    crate::rng::derive_seed(seed, &[0x6576_616c, index as u64])
}

/// Evaluates `objective`, appends the record and returns the value. A
/// failure aborts with the trace accumulated so far.
pub(crate) fn evaluate_into(
    objective: &mut dyn Objective,
    ledger: &mut EvalLedger,
    params: HyperParams,
    seed: u64,
    direction: Direction,
) -> Result<f64> {
    let value = objective.evaluate(&params, seed).and_then(|v| {
        if v.is_nan() {
            Err(Error::Objective(format!("objective returned NaN at {params:?}")))
        } else {
            Ok(v)
        }
    });
    match value {
        Ok(v) => {
            ledger.push(EvalRecord { params, value: v, sample_size: objective.sample_size(), seed })?;
            Ok(v)
        }
        Err(e) => Err(Error::OptimizationAborted { message: e.to_string(), trace: ledger.trace(direction) }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn space() -> SearchSpace {
        SearchSpace::new(vec![SearchSpace::continuous("alpha", 0.0, 1.0), SearchSpace::integer("n", 4, 10)]).unwrap()
    }

    #[test]
    fn snapping_respects_integer_bounds() {
        let s = space();
        assert_eq!(s.snap(&[1.3, 10.6]), vec![1.0, 10.0]);
        assert_eq!(s.snap(&[0.2, 5.4]), vec![0.2, 5.0]);
        assert!(s.contains(&[0.2, 5.0]) && !s.contains(&[0.2, 5.5]));
        let mut rng = stream(1, &[]);
        for _ in 0..100 {
            assert!(s.contains(&s.sample(&mut rng)));
        }
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(SearchSpace::new(vec![SearchSpace::continuous("x", 1.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![]).is_err());
    }

    #[test]
    fn space_json_round_trip() {
        let s = space();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains(r#""kind":"integer""#));
        assert_eq!(serde_json::from_str::<SearchSpace>(&j).unwrap(), s);
    }

    #[test]
    fn ledger_rejects_duplicates_and_ties_go_first() {
        let mut l = EvalLedger::new();
        let rec = |p: f64, v: f64, seed| EvalRecord { params: vec![p], value: v, sample_size: 1, seed };
        l.push(rec(0.1, 2.0, 1)).unwrap();
        l.push(rec(0.2, 1.0, 2)).unwrap();
        l.push(rec(0.3, 1.0, 3)).unwrap();
        assert!(matches!(l.push(rec(0.1, 5.0, 1)), Err(Error::DuplicateRecord)));
        l.push(rec(0.1, 5.0, 4)).unwrap();
        assert_eq!(l.best(Direction::Minimize), Some(1));
        assert_eq!(l.best(Direction::Maximize), Some(3));
        assert_eq!(l.trace(Direction::Minimize), vec![2.0, 1.0, 1.0, 1.0]);
        assert_eq!(l.trace(Direction::Maximize), vec![2.0, 2.0, 2.0, 5.0]);
    }
}
