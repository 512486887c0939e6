//! Classical resampling of ZNE instances from per-level binomial models
//! estimated once on the (simulated) device.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::sim::{plus_probability, sample_from_probability, ShotNoise};
use crate::zne::{allocate_shots, mitigate_from_probabilities, ZneConfig, ZneProblem, ZneRun};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelModel {
    pub level: usize,
    pub p_plus: f64,
    /// Shots behind the estimate; `None` for a model built from exact
    /// expectations.
    pub source_shots: Option<u64>,
}

/// Per-level `+1` probabilities, levels `1..=len` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LevelModel>", into = "Vec<LevelModel>")]
pub struct ShotModel {
    levels: Vec<LevelModel>,
}

impl TryFrom<Vec<LevelModel>> for ShotModel {
    type Error = Error;
    fn try_from(levels: Vec<LevelModel>) -> Result<Self> {
        Self::new(levels)
    }
}

impl From<ShotModel> for Vec<LevelModel> {
    fn from(m: ShotModel) -> Self {
        m.levels
    }
}

impl ShotModel {
    pub fn new(levels: Vec<LevelModel>) -> Result<Self> {
        for (i, l) in levels.iter().enumerate() {
            if l.level != i + 1 {
                return Err(Error::MissingLevel(i + 1));
            }
            if !(0.0..=1.0).contains(&l.p_plus) {
                return Err(Error::InvalidProbability { name: "p_plus", value: l.p_plus });
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[LevelModel] {
        &self.levels
    }

    pub fn p_plus(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.p_plus).collect()
    }

    /// Quantum shots spent building the model.
    pub fn source_shots(&self) -> u64 {
        self.levels.iter().filter_map(|l| l.source_shots).sum()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// How model-building shots are spread over the levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBudget {
    Equal { shots_per_level: u64 },
    /// The same allocation rule a ZNE run with this `alpha` would use.
    Allocated { alpha: f64, shots_total: u64 },
    /// Exact noisy expectations, no shots.
    Exact,
}

impl Default for ModelBudget {
    fn default() -> Self {
        ModelBudget::Equal { shots_per_level: 1_000_000 }
    }
}

/// Estimates `p_plus` for levels `1..=levels` of `problem`; level `k`
/// draws from `stream(seed, [k])`.
pub fn estimate_shot_model(problem: &ZneProblem, levels: usize, budget: ModelBudget, seed: u64) -> Result<ShotModel> {
    let shots: Option<Vec<u64>> = match budget {
        ModelBudget::Equal { shots_per_level } => {
            if shots_per_level < 1 {
                return Err(Error::InvalidArgument("shots_per_level must be positive".into()));
            }
            Some(vec![shots_per_level; levels])
        }
        ModelBudget::Allocated { alpha, shots_total } => Some(allocate_shots(&ZneConfig::new(levels, alpha, shots_total)?)?),
        ModelBudget::Exact => None,
    };
    let mut out = Vec::with_capacity(levels);
    for k in 1..=levels {
        let p = plus_probability(problem.noisy_value(k)?)?;
        let (p_plus, source_shots) = match &shots {
            Some(s) => {
                let e = sample_from_probability(p, s[k - 1], &mut stream(seed, &[k as u64]))?;
                (e.plus as f64 / e.shots as f64, Some(e.shots))
            }
            None => (p, None),
        };
        out.push(LevelModel { level: k, p_plus, source_shots });
    }
    ShotModel::new(out)
}

/// One ZNE instance resampled from `model`; no simulator calls.
pub fn bootstrap_mitigate<R: Rng + ?Sized>(model: &ShotModel, config: &ZneConfig, rng: &mut R) -> Result<ZneRun> {
    config.validate()?;
    mitigate_from_probabilities(&model.p_plus(), config, ShotNoise::Binomial, rng)
}
