//! Shared run-time state of an experiment: the circuit of interest, the
//! mitigation problem, and risk objectives over it.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{CircuitSource, ExperimentConfig, MitigationConfig, OptimizerConfig, OptimizerMethod, UqSettings};
use crate::bootstrap::{bootstrap_mitigate, ShotModel};
use crate::cdr::{cdr_mitigate, CdrProblem, TrainingPool, TrainingSource};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::opt::{differential_evolution, random_search, surrogate_optimize, Objective, OptRunResult, SearchSpace};
use crate::rng::derive_seed;
use crate::sim::{exact_expectation, NoiseModel, PauliObservable, ShotNoise};
use crate::stateprep::{build_xy_hamiltonian, optimize_ground_state, GroundStateResult};
use crate::uq::{sample_eta, RiskEstimates};
use crate::zne::{zne_mitigate, ZneProblem};

// Seed-derivation tags; one per independent consumer of the master seed.
pub(crate) const TAG_GROUND: u64 = 1;
pub(crate) const TAG_POOL: u64 = 2;
pub(crate) const TAG_FAMILY: u64 = 3;
pub(crate) const TAG_RUN: u64 = 4;
pub(crate) const TAG_MODEL: u64 = 5;
pub(crate) const TAG_REEVAL: u64 = 6;
pub(crate) const TAG_STUDY: u64 = 7;

/// The circuit of interest and its noiseless expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub circuit: Circuit,
    pub observable: PauliObservable,
    pub exact: f64,
    /// Present when the circuit was prepared in this run.
    pub ground_state: Option<GroundStateResult>,
}

impl Context {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let (circuit, ground_state) = match &config.circuit {
            CircuitSource::GroundState { ansatz, periodic, tol, settings } => {
                let h = build_xy_hamiltonian(ansatz.num_qubits, *periodic)?;
                let g = optimize_ground_state(&h, ansatz, *tol, derive_seed(config.seed, &[TAG_GROUND]), settings)?;
                (g.circuit.clone(), Some(g))
            }
            CircuitSource::File { path } => (Circuit::load(path)?, None),
        };
        let exact = exact_expectation(&circuit, &config.observable)?;
        Ok(Self { circuit, observable: config.observable.clone(), exact, ground_state })
    }
}

/// Loads the pool at `config.pool.path` when one is saved there; otherwise
/// generates it and saves it to that path, or to `fallback_dir`.
pub fn load_or_generate_pool(config: &ExperimentConfig, ctx: &Context, fallback_dir: &Path) -> Result<TrainingPool> {
    let dir = config.pool.path.clone().unwrap_or_else(|| fallback_dir.to_path_buf());
    if dir.join("pool.json").is_file() {
        return TrainingPool::load(&dir);
    }
    let pool = TrainingPool::generate(
        &ctx.circuit,
        &ctx.observable,
        &config.noise,
        config.pool.size,
        &config.pool.mcmc,
        derive_seed(config.seed, &[TAG_POOL]),
    )?;
    pool.save(&dir)?;
    Ok(pool)
}

/// The mitigation problem of a run, with everything expensive cached.
pub enum Problem {
    Zne(ZneProblem),
    Cdr { problem: CdrProblem<NoiseModel>, source: TrainingSource },
}

impl Problem {
    /// Builds the problem; CDR runs load or generate their training pool
    /// under `pool_dir`.
    pub fn build(config: &ExperimentConfig, ctx: &Context, pool_dir: &Path) -> Result<Self> {
        Ok(match config.mitigation {
            MitigationConfig::Zne(_) => Problem::Zne(ZneProblem::new(ctx.circuit.clone(), ctx.observable.clone(), config.noise)?),
            MitigationConfig::Cdr(_) => Problem::Cdr {
                problem: CdrProblem::new(ctx.circuit.clone(), ctx.observable.clone(), config.noise)?,
                source: TrainingSource::Pool(load_or_generate_pool(config, ctx, pool_dir)?),
            },
        })
    }

    pub fn zne(&self) -> Option<&ZneProblem> {
        match self {
            Problem::Zne(p) => Some(p),
            Problem::Cdr { .. } => None,
        }
    }

    pub fn mitigator<'a>(&'a self, model: Option<&'a ShotModel>) -> Mitigator<'a> {
        Mitigator { problem: self, model }
    }
}

/// Produces one mitigated value per call.
#[derive(Clone, Copy)]
pub struct Mitigator<'a> {
    problem: &'a Problem,
    /// ZNE only: resample from this model instead of the simulator.
    model: Option<&'a ShotModel>,
}

/// Outcome of one mitigation with its shot cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mitigated {
    pub value: f64,
    /// Shots taken from the (simulated) device.
    pub quantum_shots: u64,
    /// Shots drawn classically from a shot model.
    pub resampled_shots: u64,
}

impl Mitigator<'_> {
    pub fn mitigate<R: Rng + ?Sized>(&self, config: &MitigationConfig, shot_noise: ShotNoise, rng: &mut R) -> Result<Mitigated> {
        match (self.problem, config, self.model) {
            (Problem::Zne(p), MitigationConfig::Zne(z), None) => {
                let run = zne_mitigate(p, z, shot_noise, rng)?;
                Ok(Mitigated { value: run.mitigated, quantum_shots: run.shots_used(), resampled_shots: 0 })
            }
            (Problem::Zne(_), MitigationConfig::Zne(z), Some(model)) => {
                let run = bootstrap_mitigate(model, z, rng)?;
                Ok(Mitigated { value: run.mitigated, quantum_shots: 0, resampled_shots: run.shots_used() })
            }
            (Problem::Cdr { problem, source }, MitigationConfig::Cdr(c), None) => {
                let run = cdr_mitigate(problem, &c.target, source, c.shots_total, shot_noise, rng)?;
                Ok(Mitigated { value: run.mitigated, quantum_shots: run.shots_used, resampled_shots: 0 })
            }
            _ => Err(Error::InvalidArgument("mitigation config does not match the problem".into())),
        }
    }
}

/// A risk statistic of η as a function of the hyperparameters in `space`.
pub struct RiskObjective<'a> {
    mitigator: Mitigator<'a>,
    base: MitigationConfig,
    space: SearchSpace,
    exact: f64,
    uq: UqSettings,
    pub quantum_shots: u64,
    pub resampled_shots: u64,
}

impl<'a> RiskObjective<'a> {
    pub fn new(mitigator: Mitigator<'a>, base: MitigationConfig, space: SearchSpace, exact: f64, uq: UqSettings) -> Self {
        Self { mitigator, base, space, exact, uq, quantum_shots: 0, resampled_shots: 0 }
    }

    /// All risk estimates at `params` from the sample keyed by `seed`.
    pub fn estimates(&mut self, params: &[f64], seed: u64) -> Result<RiskEstimates> {
        let cfg = self.base.with_params(&self.space, params)?;
        cfg.validate()?;
        let (mut quantum, mut resampled) = (0, 0);
        let sample = sample_eta(
            |rng| {
                let m = self.mitigator.mitigate(&cfg, self.uq.shot_noise, rng)?;
                quantum += m.quantum_shots;
                resampled += m.resampled_shots;
                Ok(m.value)
            },
            self.exact,
            self.uq.n_samples,
            seed,
        )?;
        self.quantum_shots += quantum;
        self.resampled_shots += resampled;
        RiskEstimates::of(&sample, self.uq.beta)
    }
}

impl Objective for RiskObjective<'_> {
    fn evaluate(&mut self, params: &[f64], seed: u64) -> Result<f64> {
        let stat = self.uq.statistic;
        Ok(self.estimates(params, seed)?.get(stat))
    }

    fn sample_size(&self) -> usize {
        self.uq.n_samples
    }
}

/// One optimizer run as configured. A surrogate run without adaptive rounds
/// evaluates its initial design only.
pub fn run_optimizer(objective: &mut dyn Objective, space: &SearchSpace, opt: &OptimizerConfig, seed: u64) -> Result<OptRunResult> {
    match opt.method {
        OptimizerMethod::Surrogate if opt.surrogate.m_iter == 0 => {
            random_search(objective, space, opt.direction, opt.surrogate.m_init, seed)
        }
        OptimizerMethod::Surrogate => surrogate_optimize(objective, space, opt.direction, &opt.surrogate, seed),
        OptimizerMethod::DifferentialEvolution => differential_evolution(objective, space, opt.direction, &opt.de, seed),
    }
}
