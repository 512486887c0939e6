use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("assignment length {got} does not match the {expected} masked positions")]
    AssignmentLength { expected: usize, got: usize },

    #[error("angle {0} is not a multiple of pi/2")]
    NotClifford(f64),

    #[error("invalid clifford mask: {0}")]
    InvalidMask(String),

    #[error("noise level must be at least 1, got {0}")]
    InvalidNoiseLevel(usize),

    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("expectation value {0} lies outside [-1, 1]")]
    ExpectationOutOfRange(f64),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hamiltonian on {0} qubits is too large for dense diagonalization")]
    DimensionTooLarge(usize),

    #[error("ground-state optimization did not reach tolerance {tol:e}; best residual {best_residual:e}")]
    GroundStateNotConverged { tol: f64, best_residual: f64 },

    #[error("mcmc chain did not reach tolerance {tol} within {steps} steps; best distance {best_distance}")]
    McmcNotConverged { tol: f64, steps: usize, best_distance: f64 },

    #[error("degenerate regression design: all noisy values are identical")]
    DegenerateFit,

    #[error("linear system is singular or rank deficient")]
    Singular,

    #[error("need at least {needed} distinct points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid shot allocation: {0}")]
    InvalidAllocation(String),

    #[error("empty sample")]
    EmptySample,

    #[error("shot model does not cover noise level {0}")]
    MissingLevel(usize),

    #[error("duplicate ledger record (same params and seed)")]
    DuplicateRecord,

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("training pool has no entries")]
    EmptyPool,

    #[error("optimization aborted after {} evaluations: {message}", .trace.len())]
    OptimizationAborted { message: String, trace: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
