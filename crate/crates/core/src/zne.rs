//! Zero-noise extrapolation: CNOT folding to odd noise scales `λ_k = 2k − 1`,
//! α-parametrized shot allocation across levels, and a cubic fit evaluated at
//! `λ = 0`.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{fold_cnots, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, Matrix};
use crate::scalar::Real;
use crate::sim::{noisy_expectation, plus_probability, sample_from_probability, NoiseModel, PauliObservable, ShotNoise};

pub const MIN_LEVELS: usize = 4;
pub const MAX_LEVELS: usize = 10;

/// Weighting of the cubic least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    #[default]
    Unweighted,
    /// Rows scaled by `sqrt(shots / (1 − v²))`, the inverse binomial standard error.
    InverseVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZneConfig {
    pub n_levels: usize,
    pub alpha: f64,
    pub shots_total: u64,
    #[serde(default)]
    pub weighting: FitWeighting,
}

impl ZneConfig {
    pub fn new(n_levels: usize, alpha: f64, shots_total: u64) -> Result<Self> {
        let c = Self { n_levels, alpha, shots_total, weighting: FitWeighting::Unweighted };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_LEVELS..=MAX_LEVELS).contains(&self.n_levels) {
            return Err(Error::InvalidArgument(format!(
                "n_levels = {} outside {MIN_LEVELS}..={MAX_LEVELS}",
                self.n_levels
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidProbability { name: "alpha", value: self.alpha });
        }
        if self.shots_total < self.n_levels as u64 {
            return Err(Error::InvalidAllocation(format!(
                "{} shots cannot cover {} levels",
                self.shots_total, self.n_levels
            )));
        }
        Ok(())
    }
}

/// `λ_k = 2k − 1`.
pub fn noise_scale(level: usize) -> f64 {
    (2 * level - 1) as f64
}

/// Shots per level, `N_k = (2N/n)·[(1 − 2α)·k/(n + 1) + α]` for `k = 1..=n`,
/// rounded by largest remainder so that the entries sum to `N` exactly.
pub fn allocate_shots(config: &ZneConfig) -> Result<Vec<u64>> {
    config.validate()?;
    let n = config.n_levels;
    let total = config.shots_total;
    let scale = 2.0 * total as f64 / n as f64;
    let ideal: Vec<f64> = (1..=n)
        .map(|k| scale * ((1.0 - 2.0 * config.alpha) * k as f64 / (n + 1) as f64 + config.alpha))
        .collect();
    // snap values a few ulps below an integer so that exact cases stay exact
    let floors: Vec<u64> = ideal
        .iter()
        .map(|&x| {
            let r = x.round();
            if (x - r).abs() <= 1e-9 * x.max(1.0) { r as u64 } else { x.floor() as u64 }
        })
        .collect();
    let assigned: u64 = floors.iter().sum();
    let mut alloc = floors.clone();
    if assigned < total {
        let mut order: Vec<usize> = (0..n).collect();
        // stable sort: equal remainders go to the lower level first
        order.sort_by(|&a, &b| {
            let (fa, fb) = (ideal[a] - floors[a] as f64, ideal[b] - floors[b] as f64);
            fb.partial_cmp(&fa).unwrap()
        });
        for &i in order.iter().take((total - assigned) as usize) {
            alloc[i] += 1;
        }
    } else if assigned > total {
        return Err(Error::InvalidAllocation(format!("rounding overshoots {total} shots")));
    }
    if let Some(k) = alloc.iter().position(|&s| s < 1) {
        return Err(Error::InvalidAllocation(format!("level {} would receive no shots", k + 1)));
    }
    Ok(alloc)
}

/// Least-squares cubic through `(λ, value)` points, evaluated at `λ = 0`.
pub fn extrapolate_cubic<T: Real>(points: &[(T, T)]) -> Result<T> {
    extrapolate_weighted(points, None)
}

/// As [`extrapolate_cubic`] with optional per-point row weights.
pub fn extrapolate_weighted<T: Real>(points: &[(T, T)], weights: Option<&[T]>) -> Result<T> {
    let mut xs: Vec<T> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    if xs.len() < 4 || points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::TooFewPoints { needed: 4, got: xs.len() });
    }
    // abscissas rescaled to [-1, 1]-ish for conditioning; the intercept is unchanged
    let s = xs.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let rows: Vec<Vec<T>> = points
        .iter()
        .enumerate()
        .map(|(i, &(x, _))| {
            let t = x / s;
            let w = weights.map_or(T::one(), |w| w[i]);
            vec![w, w * t, w * t * t, w * t * t * t]
        })
        .collect();
    let rhs: Vec<T> = points
        .iter()
        .enumerate()
        .map(|(i, &(_, y))| y * weights.map_or(T::one(), |w| w[i]))
        .collect();
    Ok(lstsq(&Matrix::from_rows(&rows), &rhs)?[0])
}

/// One noise level of a ZNE run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelData {
    pub level: usize,
    pub lambda: f64,
    pub shots: u64,
    pub estimate: f64,
    /// `+1` outcome count; absent when shot sampling is bypassed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plus: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneRun {
    pub levels: Vec<NoiseLevelData>,
    pub mitigated: f64,
}

impl ZneRun {
    pub fn shots_used(&self) -> u64 {
        self.levels.iter().filter(|l| l.plus.is_some()).map(|l| l.shots).sum()
    }
}

/// Draws one ZNE instance from per-level `+1` probabilities. Under
/// [`ShotNoise::Off`] each estimate is the exact `2p − 1`.
pub fn mitigate_from_probabilities<R: Rng + ?Sized>(
    p_plus: &[f64],
    config: &ZneConfig,
    shot_noise: ShotNoise,
    rng: &mut R,
) -> Result<ZneRun> {
    let alloc = allocate_shots(config)?;
    if p_plus.len() < config.n_levels {
        return Err(Error::MissingLevel(p_plus.len() + 1));
    }
    let mut levels = Vec::with_capacity(config.n_levels);
    for (i, (&p, &shots)) in p_plus.iter().zip(&alloc).enumerate() {
        let (estimate, plus) = match shot_noise {
            ShotNoise::Binomial => {
                let e = sample_from_probability(p, shots, rng)?;
                (e.value, Some(e.plus))
            }
            ShotNoise::Off => (2.0 * p - 1.0, None),
        };
        levels.push(NoiseLevelData { level: i + 1, lambda: noise_scale(i + 1), shots, estimate, plus });
    }
    let mitigated = extrapolate_levels(&levels, config.weighting)?;
    Ok(ZneRun { levels, mitigated })
}

fn extrapolate_levels(levels: &[NoiseLevelData], weighting: FitWeighting) -> Result<f64> {
    let points: Vec<(f64, f64)> = levels.iter().map(|l| (l.lambda, l.estimate)).collect();
    match weighting {
        FitWeighting::Unweighted => extrapolate_cubic(&points),
        FitWeighting::InverseVariance => {
            let w: Vec<f64> = levels
                .iter()
                .map(|l| (l.shots as f64 / (1.0 - l.estimate * l.estimate).max(1e-6)).sqrt())
                .collect();
            extrapolate_weighted(&points, Some(&w))
        }
    }
}

/// A circuit and observable under a noise model, with the noisy expectation
/// of each folded circuit computed at most once.
#[derive(Debug)]
pub struct ZneProblem {
    circuit: Circuit,
    obs: PauliObservable,
    noise: NoiseModel,
    cache: [OnceLock<f64>; MAX_LEVELS],
}

impl ZneProblem {
    pub fn new(circuit: Circuit, obs: PauliObservable, noise: NoiseModel) -> Result<Self> {
        obs.check_width(circuit.num_qubits())?;
        noise.validate()?;
        Ok(Self { circuit, obs, noise, cache: Default::default() })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn observable(&self) -> &PauliObservable {
        &self.obs
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Noisy expectation of the circuit folded to `level`.
    pub fn noisy_value(&self, level: usize) -> Result<f64> {
        if !(1..=MAX_LEVELS).contains(&level) {
            return Err(Error::InvalidNoiseLevel(level));
        }
        let slot = &self.cache[level - 1];
        if let Some(&v) = slot.get() {
            return Ok(v);
        }
        let v = noisy_expectation(&fold_cnots(&self.circuit, level)?, &self.obs, &self.noise)?;
        Ok(*slot.get_or_init(|| v))
    }

    pub fn noisy_values(&self, levels: usize) -> Result<Vec<f64>> {
        (1..=levels).map(|k| self.noisy_value(k)).collect()
    }

    pub fn plus_probabilities(&self, levels: usize) -> Result<Vec<f64>> {
        self.noisy_values(levels)?.into_iter().map(plus_probability).collect()
    }
}

/// One ZNE mitigation of `problem` with the shot allocation of `config`.
pub fn zne_mitigate<R: Rng + ?Sized>(
    problem: &ZneProblem,
    config: &ZneConfig,
    shot_noise: ShotNoise,
    rng: &mut R,
) -> Result<ZneRun> {
    config.validate()?;
    match shot_noise {
        ShotNoise::Binomial => mitigate_from_probabilities(&problem.plus_probabilities(config.n_levels)?, config, shot_noise, rng),
        ShotNoise::Off => {
            // exact values, without the (1 + v)/2 round trip
            let values = problem.noisy_values(config.n_levels)?;
            let alloc = allocate_shots(config)?;
            let levels: Vec<NoiseLevelData> = values
                .iter()
                .zip(&alloc)
                .enumerate()
                .map(|(i, (&v, &shots))| NoiseLevelData {
                    level: i + 1,
                    lambda: noise_scale(i + 1),
                    shots,
                    estimate: v,
                    plus: None,
                })
                .collect();
            let mitigated = extrapolate_levels(&levels, config.weighting)?;
            Ok(ZneRun { levels, mitigated })
        }
    }
}
