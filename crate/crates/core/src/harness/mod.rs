//! Config-driven experiment orchestration and result persistence.

pub mod artifact;
pub mod config;
pub mod context;
pub mod runners;

pub use artifact::{OutputDir, RunArtifact, ShotAccount};
pub use config::{
    BootstrapSettings, CdrConfig, CircuitSource, CostPath, ExperimentConfig, ExperimentKind, MitigationConfig,
    OptimizerConfig, OptimizerMethod, PoolSettings, TransferSettings, UqSettings,
};
pub use context::{run_optimizer, Context, Mitigated, Mitigator, Problem, RiskObjective};
pub use runners::{
    load_family, run_bootstrap_compare, run_convergence, run_experiment, run_gen_training_pool, run_prepare_state,
    run_robust_design, run_transfer, save_family, RunRecord, TransferRow,
};
