use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode cutoff n_c = {0} (must be at least 1)")]
    InvalidCutoff(usize),

    #[error("invalid momentum ratio: M = {m} must satisfy 1 <= M <= n_c = {n_c}")]
    InvalidMomentumRatio { m: usize, n_c: usize },

    #[error("cannot place {n} fermions into {modes} modes")]
    OverFilled { n: usize, modes: usize },

    #[error("invalid particle number {0}")]
    InvalidParticleNumber(usize),

    #[error("restricted basis is empty")]
    EmptySubspace,

    #[error("mode groups disagree with coupling-graph connectivity: {0}")]
    GroupMismatch(String),

    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("superoperator of dimension {dim2} exceeds the limit {limit}")]
    OverLimit { dim2: usize, limit: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("trace drift {drift:e} at t = {t} exceeds tolerance")]
    TraceDrift { t: f64, drift: f64 },

    #[error("steady state not converged by t = {t} (residual {residual:e})")]
    NotConverged { t: f64, residual: f64 },

    #[error("{failed} of {total} sweep points failed")]
    SweepFailures { failed: usize, total: usize },

    #[error("degenerate null space of dimension {0}")]
    DegenerateNullSpace(usize),

    #[error("state residual {residual:e} above tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("non-uniform time grid")]
    NonUniformGrid,

    #[error("photon cutoff too small for requested Q-grid extent (coherent norm error {0:e})")]
    CutoffWarning(f64),

    #[error("projection onto coherent state has vanishing norm {0:e}")]
    DegenerateProjection(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
