use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("argument outside the domain of {what}: {value}")]
    DomainError { what: &'static str, value: f64 },

    #[error("Green's function evaluated on its singularity (x = z)")]
    SingularPoint,

    #[error("invalid polygon size k = {0}")]
    InvalidK(usize),

    #[error("parameters outside the admissible regime: {0}")]
    RegimeError(String),

    #[error("spikes {0} and {1} coincide")]
    CoincidentSpikes(usize, usize),

    #[error("no root on the admissible bracket: {0}")]
    NoRoot(String),

    #[error("finite-difference Hessian is not symmetric (relative asymmetry {0:.3e})")]
    StepError(f64),

    #[error("radial grid too short or too coarse: {0}")]
    GridError(String),

    #[error("positivity lost at t = {t}: min A = {min_a:.3e}, min H = {min_h:.3e}")]
    PositivityLoss { t: f64, min_a: f64, min_h: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
