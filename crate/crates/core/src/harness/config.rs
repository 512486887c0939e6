//! Experiment configuration: one JSON document fully determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bootstrap::ModelBudget;
use crate::cdr::{split_shots, McmcSettings, TrainingTargetSpec};
use crate::error::{Error, Result};
use crate::opt::{DeSettings, Direction, SearchSpace, SurrogateSettings};
use crate::sim::{NoiseModel, PauliObservable, ShotNoise};
use crate::stateprep::{AnsatzSpec, GroundStateSettings};
use crate::uq::Statistic;
use crate::zne::{ZneConfig, MAX_LEVELS, MIN_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PrepareState,
    GenTrainingPool,
    Convergence,
    Optimize,
    Transfer,
    BootstrapCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PrepareState => "prepare-state",
            Self::GenTrainingPool => "gen-training-pool",
            Self::Convergence => "convergence",
            Self::Optimize => "optimize",
            Self::Transfer => "transfer",
            Self::BootstrapCompare => "bootstrap-compare",
        }
    }
}

/// Where the circuit of interest comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CircuitSource {
    /// Variational ground state of the XY chain, prepared at run time.
    GroundState {
        ansatz: AnsatzSpec,
        #[serde(default = "yes")]
        periodic: bool,
        #[serde(default = "default_ground_tol")]
        tol: f64,
        #[serde(default)]
        settings: GroundStateSettings,
    },
    /// A circuit JSON file, as written by `prepare-state`.
    File { path: PathBuf },
}

fn yes() -> bool {
    true
}

fn default_ground_tol() -> f64 {
    1e-6
}

impl Default for CircuitSource {
    fn default() -> Self {
        CircuitSource::GroundState {
            ansatz: AnsatzSpec::new(6, 10),
            periodic: true,
            tol: default_ground_tol(),
            settings: GroundStateSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdrConfig {
    pub target: TrainingTargetSpec,
    pub shots_total: u64,
}

impl Default for CdrConfig {
    fn default() -> Self {
        Self { target: TrainingTargetSpec { y_max: 0.87, shape: 1.2, n_train: 10 }, shots_total: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MitigationConfig {
    Zne(ZneConfig),
    Cdr(CdrConfig),
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig::Zne(ZneConfig { n_levels: 8, alpha: 0.8, shots_total: 100_000, weighting: Default::default() })
    }
}

impl MitigationConfig {
    /// Names of the tunable hyperparameters, in search-space order.
    pub fn hyperparameter_names(&self) -> [&'static str; 2] {
        match self {
            MitigationConfig::Zne(_) => ["alpha", "n_levels"],
            MitigationConfig::Cdr(_) => ["y_max", "shape"],
        }
    }

    pub fn default_space(&self) -> SearchSpace {
        let dims = match self {
            MitigationConfig::Zne(_) => vec![
                SearchSpace::continuous("alpha", 0.0, 1.0),
                SearchSpace::integer("n_levels", MIN_LEVELS as i64, MAX_LEVELS as i64),
            ],
            MitigationConfig::Cdr(_) => {
                vec![SearchSpace::continuous("y_max", 0.2, 1.0), SearchSpace::continuous("shape", 0.1, 10.0)]
            }
        };
        SearchSpace::new(dims).expect("default bounds are valid")
    }

    /// A copy with the named hyperparameters replaced.
    pub fn with_params(&self, space: &SearchSpace, params: &[f64]) -> Result<Self> {
        let mut out = *self;
        for (d, &v) in space.dims().iter().zip(params) {
            match (&mut out, d.name.as_str()) {
                (MitigationConfig::Zne(z), "alpha") => z.alpha = v,
                (MitigationConfig::Zne(z), "n_levels") => z.n_levels = v.round() as usize,
                (MitigationConfig::Cdr(c), "y_max") => c.target.y_max = v,
                (MitigationConfig::Cdr(c), "shape") => c.target.shape = v,
                (_, name) => return Err(Error::InvalidArgument(format!("unknown hyperparameter {name}"))),
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MitigationConfig::Zne(z) => z.validate(),
            MitigationConfig::Cdr(c) => {
                c.target.validate()?;
                split_shots(c.shots_total, c.target.n_train).map(|_| ())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UqSettings {
    /// Monte Carlo sample size behind one risk evaluation.
    pub n_samples: usize,
    pub beta: f64,
    pub statistic: Statistic,
    /// Sample sizes of a convergence study.
    pub sizes: Vec<usize>,
    pub replicas: usize,
    pub shot_noise: ShotNoise,
}

impl Default for UqSettings {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            beta: 0.9,
            statistic: Statistic::Tvar,
            sizes: vec![10, 30, 100, 300, 1000, 3000],
            replicas: 1000,
            shot_noise: ShotNoise::Binomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMethod {
    #[default]
    Surrogate,
    DifferentialEvolution,
}

/// How a ZNE cost evaluation obtains its shot outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostPath {
    /// Binomial draws from the simulated noisy expectations.
    #[default]
    Direct,
    /// Resampling from a per-run shot model.
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub direction: Direction,
    /// Independently seeded runs (restarts for differential evolution).
    pub runs: usize,
    /// Defaults to the mitigation method's hyperparameter box.
    pub space: Option<SearchSpace>,
    pub surrogate: SurrogateSettings,
    pub de: DeSettings,
    pub cost: CostPath,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: OptimizerMethod::Surrogate,
            direction: Direction::Minimize,
            runs: 30,
            space: None,
            surrogate: SurrogateSettings::default(),
            de: DeSettings::default(),
            cost: CostPath::Direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSettings {
    pub count: usize,
    /// Tolerance on each member's exact expectation.
    pub tol: f64,
    /// Members with `|exact|` below this are excluded from the agreement test.
    pub min_abs_exact: f64,
    /// Family manifest from `prepare-state`; generated when absent.
    pub family: Option<PathBuf>,
}

impl Default for TransferSettings {
    fn default() -> Self {
        Self { count: 20, tol: 1e-6, min_abs_exact: 0.1, family: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSettings {
    pub budget: ModelBudget,
    /// Levels covered by the model; must reach the largest `n_levels` searched.
    pub levels: usize,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self { budget: ModelBudget::default(), levels: MAX_LEVELS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolSettings {
    /// Saved pool directory. Loaded when it exists, otherwise generated and
    /// written there.
    pub path: Option<PathBuf>,
    pub size: usize,
    pub mcmc: McmcSettings,
}

impl Default for PoolSettings {
    fn default() -> Self {
        Self { path: None, size: 1000, mcmc: McmcSettings::default() }
    }
}

fn default_observable() -> PauliObservable {
    PauliObservable::xx(0, 3).expect("distinct qubits")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Checked against the requested subcommand when present.
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub circuit: CircuitSource,
    pub observable: PauliObservable,
    pub noise: NoiseModel,
    pub mitigation: MitigationConfig,
    pub uq: UqSettings,
    pub optimizer: OptimizerConfig,
    pub transfer: TransferSettings,
    pub bootstrap: BootstrapSettings,
    pub pool: PoolSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            output_dir: None,
            circuit: CircuitSource::default(),
            observable: default_observable(),
            noise: NoiseModel::default(),
            mitigation: MitigationConfig::default(),
            uq: UqSettings::default(),
            optimizer: OptimizerConfig::default(),
            transfer: TransferSettings::default(),
            bootstrap: BootstrapSettings::default(),
            pool: PoolSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn space(&self) -> SearchSpace {
        self.optimizer.space.clone().unwrap_or_else(|| self.mitigation.default_space())
    }

    /// Checks every setting `kind` reads and lists all problems at once.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let mut errs = Vec::new();
        let mut check = |r: Result<()>, ctx: &str| {
            if let Err(e) = r {
                errs.push(format!("{ctx}: {e}"));
            }
        };
        if let Some(k) = self.experiment {
            if k != kind {
                check(Err(Error::InvalidArgument(format!("config is for {}", k.name()))), "experiment");
            }
        }
        match &self.circuit {
            CircuitSource::GroundState { ansatz, tol, .. } => {
                if ansatz.num_qubits < 2 || ansatz.layers == 0 {
                    check(Err(Error::InvalidArgument("ansatz needs at least 2 qubits and 1 layer".into())), "circuit");
                }
                if !(*tol > 0.0) {
                    check(Err(Error::InvalidArgument(format!("tolerance {tol} must be positive"))), "circuit");
                }
                check(self.observable.check_width(ansatz.num_qubits), "observable");
            }
            CircuitSource::File { path } => {
                if !path.is_file() {
                    check(Err(Error::InvalidArgument(format!("{} does not exist", path.display()))), "circuit");
                }
            }
        }
        check(self.noise.validate(), "noise");
        check(self.mitigation.validate(), "mitigation");

        let uses_uq = !matches!(kind, ExperimentKind::PrepareState | ExperimentKind::GenTrainingPool);
        if uses_uq {
            let uq = &self.uq;
            if !(uq.beta > 0.0 && uq.beta < 1.0) {
                check(Err(Error::InvalidProbability { name: "beta", value: uq.beta }), "uq");
            }
            if uq.n_samples == 0 {
                check(Err(Error::InvalidArgument("n_samples must be positive".into())), "uq");
            }
            if kind == ExperimentKind::Convergence && (uq.sizes.is_empty() || uq.sizes.contains(&0) || uq.replicas == 0) {
                check(Err(Error::InvalidArgument("sizes must be positive and replicas at least 1".into())), "uq");
            }
        }
        let cdr = matches!(self.mitigation, MitigationConfig::Cdr(_));
        if cdr && uses_uq || kind == ExperimentKind::GenTrainingPool {
            if self.pool.size == 0 {
                check(Err(Error::InvalidArgument("pool size must be positive".into())), "pool");
            }
            if !(self.pool.mcmc.tol > 0.0 && self.pool.mcmc.temperature > 0.0) {
                check(Err(Error::InvalidArgument("chain tolerance and temperature must be positive".into())), "pool");
            }
        }
        if matches!(kind, ExperimentKind::Optimize | ExperimentKind::Transfer | ExperimentKind::BootstrapCompare) {
            self.validate_optimizer(kind, &mut errs);
        }
        if kind == ExperimentKind::Transfer {
            if !matches!(self.mitigation, MitigationConfig::Zne(_)) {
                errs.push("transfer: only ZNE hyperparameters are transferred".into());
            }
            let t = &self.transfer;
            if t.count < 2 || self.optimizer.runs < 2 {
                errs.push("transfer: family size and optimizer runs must be at least 2".into());
            }
            if !(t.tol > 0.0) {
                errs.push("transfer: tolerance must be positive".into());
            }
            if let Some(p) = &t.family {
                if !p.is_file() {
                    errs.push(format!("transfer: family manifest {} does not exist", p.display()));
                }
            }
        }
        if kind == ExperimentKind::PrepareState && self.transfer.count == 1 {
            errs.push("transfer: a family needs at least 2 members".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    fn validate_optimizer(&self, kind: ExperimentKind, errs: &mut Vec<String>) {
        let o = &self.optimizer;
        if o.runs == 0 {
            errs.push("optimizer: runs must be positive".into());
        }
        if o.method == OptimizerMethod::Surrogate && o.surrogate.m_init < 3 {
            errs.push("optimizer: m_init must be at least 3".into());
        }
        if let Err(e) = o.de.validate() {
            errs.push(format!("optimizer: {e}"));
        }
        let space = self.space();
        let names = self.mitigation.hyperparameter_names();
        for d in space.dims() {
            let (lo, hi) = d.dim.bounds();
            let ok = match d.name.as_str() {
                "alpha" if names.contains(&"alpha") => lo >= 0.0 && hi <= 1.0,
                "n_levels" if names.contains(&"n_levels") => {
                    d.dim.is_integer() && lo >= MIN_LEVELS as f64 && hi <= MAX_LEVELS as f64
                }
                "y_max" if names.contains(&"y_max") => lo > 0.0 && hi <= 1.0,
                "shape" if names.contains(&"shape") => lo > 0.0,
                other => {
                    errs.push(format!("optimizer: {other} is not a hyperparameter of this mitigation method"));
                    continue;
                }
            };
            if !ok {
                errs.push(format!("optimizer: bounds [{lo}, {hi}] invalid for {}", d.name));
            }
        }
        let needs_bootstrap = o.cost == CostPath::Bootstrap || kind == ExperimentKind::BootstrapCompare;
        if needs_bootstrap {
            if !matches!(self.mitigation, MitigationConfig::Zne(_)) {
                errs.push("optimizer: the bootstrap cost path applies to ZNE only".into());
            }
            let max_n = space
                .dims()
                .iter()
                .find(|d| d.name == "n_levels")
                .map(|d| d.dim.bounds().1 as usize)
                .unwrap_or(match self.mitigation {
                    MitigationConfig::Zne(z) => z.n_levels,
                    MitigationConfig::Cdr(_) => 0,
                });
            if self.bootstrap.levels < max_n || self.bootstrap.levels > MAX_LEVELS {
                errs.push(format!("bootstrap: levels = {} must cover n_levels up to {max_n}", self.bootstrap.levels));
            }
            if let ModelBudget::Equal { shots_per_level: 0 } = self.bootstrap.budget {
                errs.push("bootstrap: shots_per_level must be positive".into());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_losslessly() {
        let c = ExperimentConfig::default();
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&j).unwrap(), c);
        let mut cdr = c.clone();
        cdr.mitigation = MitigationConfig::Cdr(CdrConfig::default());
        cdr.optimizer.space = Some(cdr.mitigation.default_space());
        let j = serde_json::to_string_pretty(&cdr).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&j).unwrap(), cdr);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 7, "uq": {"replicas": 3}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.uq.replicas, 3);
        assert_eq!(c.uq.n_samples, 1000);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sead": 7}"#).is_err());
    }

    #[test]
    fn all_errors_listed() {
        let mut c = ExperimentConfig::default();
        c.uq.beta = 1.5;
        c.noise.lambda_2q = -0.1;
        c.optimizer.runs = 0;
        match c.validate(ExperimentKind::Optimize) {
            Err(Error::Config(errs)) => assert_eq!(errs.len(), 3, "{errs:?}"),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::default().validate(ExperimentKind::Convergence).is_ok());
    }

    #[test]
    fn foreign_hyperparameters_rejected() {
        let mut c = ExperimentConfig::default();
        c.optimizer.space = Some(MitigationConfig::Cdr(CdrConfig::default()).default_space());
        assert!(c.validate(ExperimentKind::Optimize).is_err());
        c.mitigation = MitigationConfig::Cdr(CdrConfig::default());
        assert!(c.validate(ExperimentKind::Optimize).is_ok());
        assert!(c.validate(ExperimentKind::BootstrapCompare).is_err());
    }

    #[test]
    fn params_override_config() {
        let m = MitigationConfig::default();
        let s = m.default_space();
        match m.with_params(&s, &[0.3, 6.0]).unwrap() {
            MitigationConfig::Zne(z) => assert_eq!((z.alpha, z.n_levels), (0.3, 6)),
            other => panic!("{other:?}"),
        }
    }
}
