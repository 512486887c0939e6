//! Clifford data regression: near-Clifford training circuits drawn by a
//! Metropolis chain towards target exact values, a linear exact-on-noisy fit,
//! and mitigation of the circuit of interest.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{clifford_angle, substitute_cliffords, Circuit, CliffordMask, Gate};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::scalar::Real;
use crate::sim::{noisy_expectation, NoiseModel, PauliObservable, ShotNoise, StateVector};

/// Parameters of the training-value distribution `y = y_max·sgn(r)·|r|^shape`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingTargetSpec {
    pub y_max: f64,
    pub shape: f64,
    pub n_train: usize,
}

impl TrainingTargetSpec {
    pub fn new(y_max: f64, shape: f64, n_train: usize) -> Result<Self> {
        let s = Self { y_max, shape, n_train };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y_max > 0.0 && self.y_max <= 1.0) {
            return Err(Error::InvalidArgument(format!("y_max = {} outside (0, 1]", self.y_max)));
        }
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return Err(Error::InvalidArgument(format!("shape = {} must be positive", self.shape)));
        }
        if self.n_train < 2 {
            return Err(Error::InvalidArgument(format!("n_train = {} below 2", self.n_train)));
        }
        Ok(())
    }

    /// Maps `r ∈ [−1, 1]` to a target value.
    pub fn target_from_uniform(&self, r: f64) -> f64 {
        self.y_max * r.signum() * r.abs().powf(self.shape)
    }
}

/// `n_train` targets from `r ~ U[−1, 1]`.
pub fn sample_targets<R: Rng + ?Sized>(spec: &TrainingTargetSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..spec.n_train)
        .map(|_| spec.target_from_uniform(rng.random_range(-1.0..=1.0)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    pub tol: f64,
    pub temperature: f64,
    pub max_steps: usize,
    /// RZ gates left at their original angles.
    pub kept_non_clifford: usize,
    /// Fresh chains (new mask, new start) tried before giving up.
    pub restarts: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { tol: 0.01, temperature: 0.05, max_steps: 5000, kept_non_clifford: 10, restarts: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCircuit {
    pub circuit: Circuit,
    pub exact_value: f64,
    pub target_value: f64,
    pub steps: usize,
}

/// Statevector checkpoints before each masked gate, so that changing the
/// `j`-th masked angle only re-simulates the circuit from that gate on.
struct Chain<'a> {
    gates: Vec<Gate>,
    positions: &'a [usize],
    obs: &'a PauliObservable,
    zero: StateVector<f64>,
    /// `checkpoints[k]` is the state just before masked gate `k`.
    checkpoints: Vec<StateVector<f64>>,
    scratch: Vec<StateVector<f64>>,
    end: StateVector<f64>,
}

impl<'a> Chain<'a> {
    /// The chain and the exact value of its initial assignment.
    fn new(base: &Circuit, mask: &'a CliffordMask, obs: &'a PauliObservable, powers: &[u8]) -> (Self, f64) {
        let mut gates = base.gates().to_vec();
        for (&pos, &p) in mask.positions().iter().zip(powers) {
            set_angle(&mut gates[pos], clifford_angle(p));
        }
        let zero = StateVector::zero_state(base.num_qubits());
        let m = mask.len();
        let mut chain = Self {
            gates,
            positions: mask.positions(),
            obs,
            checkpoints: vec![zero.clone(); m],
            scratch: vec![zero.clone(); m],
            end: zero.clone(),
            zero,
        };
        let value = chain.run(None);
        std::mem::swap(&mut chain.checkpoints, &mut chain.scratch);
        (chain, value)
    }

    /// Simulates from masked gate `j` (or from the start), writing later
    /// checkpoints into `scratch`, and returns `⟨O⟩`.
    fn run(&mut self, from: Option<usize>) -> f64 {
        let (start, mut next) = match from {
            None => {
                self.end.copy_from(&self.zero);
                (0, 0)
            }
            Some(j) => {
                self.end.copy_from(&self.checkpoints[j]);
                (self.positions[j], j + 1)
            }
        };
        for idx in start..self.gates.len() {
            if next < self.positions.len() && idx == self.positions[next] {
                self.scratch[next].copy_from(&self.end);
                next += 1;
            }
            self.end.apply(&self.gates[idx]);
        }
        self.end.expectation(self.obs)
    }

    /// Sets masked gate `j` to `power` and returns the new exact value. The
    /// checkpoints are updated only by a following [`Chain::commit`].
    fn propose(&mut self, j: usize, power: u8) -> f64 {
        set_angle(&mut self.gates[self.positions[j]], clifford_angle(power));
        self.run(Some(j))
    }

    fn commit(&mut self, j: usize) {
        for k in j + 1..self.checkpoints.len() {
            std::mem::swap(&mut self.checkpoints[k], &mut self.scratch[k]);
        }
    }

    fn revert(&mut self, j: usize, power: u8) {
        set_angle(&mut self.gates[self.positions[j]], clifford_angle(power));
    }
}

fn set_angle(g: &mut Gate, value: f64) {
    if let Gate::Rz { angle, .. } = g {
        *angle = value;
    }
}

/// Metropolis walk over Clifford powers of the masked RZ gates, minimizing
/// `|⟨O⟩_exact − target|` until it is within `tol`.
pub fn mcmc_training_circuit<R: Rng + ?Sized>(
    base: &Circuit,
    mask: &CliffordMask,
    target: f64,
    obs: &PauliObservable,
    settings: &McmcSettings,
    rng: &mut R,
) -> Result<TrainingCircuit> {
    if !(target.abs() <= 1.0) || !(settings.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("mcmc target {target} with tol {}", settings.tol)));
    }
    obs.check_width(base.num_qubits())?;
    let mut powers: Vec<u8> = (0..mask.len()).map(|_| rng.random_range(0..4u8)).collect();
    let (mut chain, mut value) = Chain::new(base, mask, obs, &powers);
    let mut cost = (value - target).abs();
    let mut best = cost;
    for step in 0..=settings.max_steps {
        if cost <= settings.tol {
            let angles: Vec<f64> = powers.iter().map(|&p| clifford_angle(p)).collect();
            let circuit = substitute_cliffords(base, mask, &angles)?;
            return Ok(TrainingCircuit { circuit, exact_value: value, target_value: target, steps: step });
        }
        if step == settings.max_steps || mask.is_empty() {
            break;
        }
        let j = rng.random_range(0..powers.len());
        let old = powers[j];
        let new = (old + rng.random_range(1..4u8)) % 4;
        let v = chain.propose(j, new);
        let new_cost = (v - target).abs();
        let accept = new_cost <= cost || rng.random::<f64>() < (-(new_cost - cost) / settings.temperature).exp();
        if accept {
            chain.commit(j);
            powers[j] = new;
            (value, cost) = (v, new_cost);
            best = best.min(cost);
        } else {
            chain.revert(j, old);
        }
    }
    Err(Error::McmcNotConverged { tol: settings.tol, steps: settings.max_steps, best_distance: best })
}

/// [`mcmc_training_circuit`] with a fresh random mask per attempt, retried up
/// to `settings.restarts` times.
pub fn generate_training_circuit(
    base: &Circuit,
    target: f64,
    obs: &PauliObservable,
    settings: &McmcSettings,
    seed: u64,
) -> Result<TrainingCircuit> {
    let mut last = None;
    for attempt in 0..settings.restarts.max(1) {
        let mut rng = stream(seed, &[attempt as u64]);
        let mask = CliffordMask::random(base, settings.kept_non_clifford, &mut rng)?;
        match mcmc_training_circuit(base, &mask, target, obs, settings, &mut rng) {
            Ok(t) => return Ok(t),
            Err(e @ Error::McmcNotConverged { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
}

impl RegressionFit {
    pub fn apply(&self, noisy: f64) -> f64 {
        self.slope * noisy + self.intercept
    }
}

/// Ordinary least squares of exact on noisy over `(noisy, exact)` pairs.
/// Returns `(slope, intercept)`.
pub fn fit_line<T: Real>(pairs: &[(T, T)]) -> Result<(T, T)> {
    if pairs.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: pairs.len() });
    }
    let n = T::of_usize(pairs.len());
    let mx = pairs.iter().map(|p| p.0).sum::<T>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(Error::DegenerateFit);
    }
    Ok((slope, intercept))
}

pub fn fit_regression(pairs: &[(f64, f64)]) -> Result<RegressionFit> {
    let (slope, intercept) = fit_line(pairs)?;
    Ok(RegressionFit { slope, intercept })
}

/// Source of noisy expectation values.
pub trait NoisyBackend: Sync {
    fn noisy_value(&self, circuit: &Circuit, obs: &PauliObservable) -> Result<f64>;
}

impl NoisyBackend for NoiseModel {
    fn noisy_value(&self, circuit: &Circuit, obs: &PauliObservable) -> Result<f64> {
        noisy_expectation(circuit, obs, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: usize,
    pub circuit: Circuit,
    pub target: f64,
    pub exact: f64,
    /// Infinite-shot noisy expectation under the backend the pool was built with.
    pub noisy: f64,
}

/// Precomputed training circuits, kept sorted by exact value.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPool {
    entries: Vec<PoolEntry>,
    tol: f64,
    /// Targets for which no chain converged during generation.
    unreached: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    id: usize,
    file: String,
    target: f64,
    exact: f64,
    noisy: f64,
}

impl TrainingPool {
    pub fn new(mut entries: Vec<PoolEntry>, tol: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyPool);
        }
        entries.sort_by(|a, b| a.exact.total_cmp(&b.exact).then(a.id.cmp(&b.id)));
        Ok(Self { entries, tol, unreached: 0 })
    }

    /// Draws `size` targets uniform on `[−1, 1]`, target `i` from seed
    /// `derive_seed(seed, [i])`. Targets no chain reaches are skipped and
    /// counted in [`TrainingPool::unreached`].
    pub fn generate<B: NoisyBackend + ?Sized>(
        base: &Circuit,
        obs: &PauliObservable,
        backend: &B,
        size: usize,
        settings: &McmcSettings,
        seed: u64,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(size);
        let mut unreached = 0;
        for id in 0..size {
            let s = derive_seed(seed, &[id as u64]);
            let target: f64 = stream(s, &[u64::MAX]).random_range(-1.0..=1.0);
            let t = match generate_training_circuit(base, target, obs, settings, s) {
                Ok(t) => t,
                Err(Error::McmcNotConverged { .. }) => {
                    unreached += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let noisy = backend.noisy_value(&t.circuit, obs)?;
            entries.push(PoolEntry { id, circuit: t.circuit, target, exact: t.exact_value, noisy });
        }
        let mut pool = Self::new(entries, settings.tol)?;
        pool.unreached = unreached;
        Ok(pool)
    }

    pub fn unreached(&self) -> usize {
        self.unreached
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// A uniformly chosen entry with `|exact − target| ≤ tol`, or the nearest
    /// entry when none qualifies. The flag reports whether the lookup missed.
    pub fn lookup<R: Rng + ?Sized>(&self, target: f64, rng: &mut R) -> (&PoolEntry, bool) {
        let lo = self.entries.partition_point(|e| e.exact < target - self.tol);
        let hi = self.entries.partition_point(|e| e.exact <= target + self.tol);
        if lo < hi {
            return (&self.entries[rng.random_range(lo..hi)], false);
        }
        let nearest = [lo.checked_sub(1), (lo < self.entries.len()).then_some(lo)]
            .into_iter()
            .flatten()
            .min_by(|&a, &b| {
                (self.entries[a].exact - target).abs().total_cmp(&(self.entries[b].exact - target).abs())
            })
            .expect("pool is non-empty");
        (&self.entries[nearest], true)
    }

    /// Writes `circuits/<id>.json` and `index.csv` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("circuits"))?;
        let mut rows: Vec<&PoolEntry> = self.entries.iter().collect();
        rows.sort_by_key(|e| e.id);
        let mut w = csv::Writer::from_path(dir.join("index.csv"))?;
        for e in rows {
            let file = format!("circuits/{:05}.json", e.id);
            e.circuit.save(dir.join(&file))?;
            w.serialize(IndexRow { id: e.id, file, target: e.target, exact: e.exact, noisy: e.noisy })?;
        }
        w.flush()?;
        fs::write(dir.join("pool.json"), serde_json::to_string_pretty(&serde_json::json!({ "tol": self.tol, "unreached": self.unreached }))?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("pool.json"))?)?;
        let tol = meta["tol"].as_f64().ok_or_else(|| Error::InvalidArgument("pool.json lacks tol".into()))?;
        let mut entries = Vec::new();
        for row in csv::Reader::from_path(dir.join("index.csv"))?.deserialize() {
            let row: IndexRow = row?;
            let circuit = Circuit::load(dir.join(&row.file))?;
            entries.push(PoolEntry { id: row.id, circuit, target: row.target, exact: row.exact, noisy: row.noisy });
        }
        let mut pool = Self::new(entries, tol)?;
        pool.unreached = meta["unreached"].as_u64().unwrap_or(0) as usize;
        Ok(pool)
    }
}

/// Where training circuits come from.
#[derive(Debug, Clone)]
pub enum TrainingSource {
    /// A new chain per target.
    Fresh(McmcSettings),
    Pool(TrainingPool),
}

/// The circuit of interest with its noisy value cached.
pub struct CdrProblem<B> {
    circuit: Circuit,
    obs: PauliObservable,
    backend: B,
    noisy: OnceLock<f64>,
}

impl<B: NoisyBackend> CdrProblem<B> {
    pub fn new(circuit: Circuit, obs: PauliObservable, backend: B) -> Result<Self> {
        obs.check_width(circuit.num_qubits())?;
        Ok(Self { circuit, obs, backend, noisy: OnceLock::new() })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn observable(&self) -> &PauliObservable {
        &self.obs
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn noisy_value(&self) -> Result<f64> {
        if let Some(&v) = self.noisy.get() {
            return Ok(v);
        }
        let v = self.backend.noisy_value(&self.circuit, &self.obs)?;
        Ok(*self.noisy.get_or_init(|| v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdrRun {
    pub targets: Vec<f64>,
    /// `(noisy estimate, exact)` training pairs.
    pub training: Vec<(f64, f64)>,
    pub noisy_estimate: f64,
    pub fit: RegressionFit,
    pub mitigated: f64,
    pub shots_used: u64,
    pub pool_misses: usize,
}

/// Shots per training circuit and for the circuit of interest.
pub fn split_shots(shots_total: u64, n_train: usize) -> Result<(u64, u64)> {
    let parts = n_train as u64 + 1;
    if shots_total < parts {
        return Err(Error::InvalidAllocation(format!("{shots_total} shots for {parts} circuits")));
    }
    let each = shots_total / parts;
    Ok((each, each + shots_total % parts))
}

/// One CDR mitigation: draws targets, obtains training circuits, estimates
/// every noisy value with finite shots, fits and corrects.
pub fn cdr_mitigate<B: NoisyBackend, R: Rng + ?Sized>(
    problem: &CdrProblem<B>,
    spec: &TrainingTargetSpec,
    source: &TrainingSource,
    shots_total: u64,
    shot_noise: ShotNoise,
    rng: &mut R,
) -> Result<CdrRun> {
    let (per_train, for_target) = split_shots(shots_total, spec.n_train)?;
    let targets = sample_targets(spec, rng)?;
    let mut training = Vec::with_capacity(targets.len());
    let mut pool_misses = 0;
    for &t in &targets {
        let (exact, noisy) = match source {
            TrainingSource::Fresh(settings) => {
                let tc = generate_training_circuit(&problem.circuit, t, &problem.obs, settings, rng.random())?;
                let noisy = problem.backend.noisy_value(&tc.circuit, &problem.obs)?;
                (tc.exact_value, noisy)
            }
            TrainingSource::Pool(pool) => {
                let (e, missed) = pool.lookup(t, rng);
                pool_misses += usize::from(missed);
                (e.exact, e.noisy)
            }
        };
        training.push((shot_noise.estimate(noisy, per_train, rng)?, exact));
    }
    let noisy_estimate = shot_noise.estimate(problem.noisy_value()?, for_target, rng)?;
    let fit = fit_regression(&training)?;
    let shots_used = match shot_noise {
        ShotNoise::Binomial => shots_total,
        ShotNoise::Off => 0,
    };
    Ok(CdrRun { targets, training, noisy_estimate, fit, mitigated: fit.apply(noisy_estimate), shots_used, pool_misses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{exact_expectation, Pauli};

    #[test]
    fn target_map_examples() {
        let s = TrainingTargetSpec::new(0.8, 2.0, 10).unwrap();
        assert!((s.target_from_uniform(0.25) - 0.05).abs() < 1e-15);
        for shape in [0.3, 1.0, 7.0] {
            let s = TrainingTargetSpec::new(0.6, shape, 10).unwrap();
            assert_eq!(s.target_from_uniform(-1.0), -0.6);
        }
        assert!(TrainingTargetSpec::new(0.0, 1.0, 10).is_err());
        assert!(TrainingTargetSpec::new(0.5, 0.0, 10).is_err());
        assert!(TrainingTargetSpec::new(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn regression_examples() {
        let f = fit_regression(&[(0.0, 0.0), (1.0, 1.0), (-1.0, -1.0)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-15 && f.intercept.abs() < 1e-15);
        let f = fit_regression(&[(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        let pairs: Vec<(f64, f64)> = (0..7).map(|i| i as f64 * 0.13 - 0.4).map(|x| (x, 0.8 * x - 0.1)).collect();
        let f = fit_regression(&pairs).unwrap();
        assert!((f.slope - 0.8).abs() < 1e-12 && (f.intercept + 0.1).abs() < 1e-12);
        assert!(matches!(fit_regression(&[(0.2, 0.0), (0.2, 1.0)]), Err(Error::DegenerateFit)));
    }

    #[test]
    fn split_with_remainder() {
        assert_eq!(split_shots(10_000, 10).unwrap(), (909, 910));
        assert!(split_shots(10, 10).is_err());
    }

    fn toy() -> Circuit {
        Circuit::new(
            2,
            vec![
                Gate::sqrt_x(0),
                Gate::rz(0, 0.37).unwrap(),
                Gate::sqrt_x(0),
                Gate::cnot(0, 1).unwrap(),
                Gate::rz(1, 1.21).unwrap(),
                Gate::sqrt_x(1),
                Gate::rz(1, 2.9).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_with_vacuous_tolerance_stops_at_once() {
        let c = toy();
        let mask = CliffordMask::new(&c, c.rz_positions()).unwrap();
        let s = McmcSettings { tol: 2.0, ..McmcSettings::default() };
        let t = mcmc_training_circuit(&c, &mask, 0.3, &PauliObservable::zz(0, 1).unwrap(), &s, &mut stream(1, &[]))
            .unwrap();
        assert_eq!(t.steps, 0);
        assert_eq!(t.circuit.non_clifford_count(1e-9), 0);
    }

    #[test]
    fn checkpointed_chain_matches_full_simulation() {
        let c = toy();
        let mask = CliffordMask::new(&c, vec![1, 6]).unwrap();
        let obs = PauliObservable::new([(0, Pauli::X), (1, Pauli::Y)]).unwrap();
        let mut powers = vec![1u8, 2];
        let (mut chain, _) = Chain::new(&c, &mask, &obs, &powers);
        let mut rng = stream(2, &[]);
        for _ in 0..40 {
            let j = rng.random_range(0..2);
            let new = rng.random_range(0..4u8);
            let v = chain.propose(j, new);
            let mut trial = powers.clone();
            trial[j] = new;
            let angles: Vec<f64> = trial.iter().map(|&p| clifford_angle(p)).collect();
            let full = exact_expectation(&substitute_cliffords(&c, &mask, &angles).unwrap(), &obs).unwrap();
            assert!((v - full).abs() < 1e-12);
            if rng.random::<bool>() {
                chain.commit(j);
                powers = trial;
            } else {
                chain.revert(j, powers[j]);
            }
        }
    }

    #[test]
    fn pool_lookup_and_round_trip() {
        let c = toy();
        let obs = PauliObservable::zz(0, 1).unwrap();
        // two-qubit toy values are too coarse for a real tolerance
        let s = McmcSettings { kept_non_clifford: 1, tol: 2.0, ..McmcSettings::default() };
        let pool = TrainingPool::generate(&c, &obs, &NoiseModel::default(), 12, &s, 5).unwrap();
        assert!(pool.entries().windows(2).all(|w| w[0].exact <= w[1].exact));
        for e in pool.entries() {
            assert!((e.exact - e.target).abs() <= 2.0);
            assert_eq!(e.circuit.non_clifford_count(1e-9), 1);
        }
        let (hit, missed) = pool.lookup(pool.entries()[3].exact, &mut stream(0, &[]));
        assert!(!missed && (hit.exact - pool.entries()[3].exact).abs() <= 2.0);
        let narrow = TrainingPool::new(pool.entries().to_vec(), 1e-12).unwrap();
        let (_, missed) = narrow.lookup(5.0, &mut stream(0, &[]));
        assert!(missed);
        let dir = tempfile::tempdir().unwrap();
        pool.save(dir.path()).unwrap();
        assert_eq!(TrainingPool::load(dir.path()).unwrap(), pool);
    }
}
