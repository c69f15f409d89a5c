use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum WeylError {
    #[error("t = {t} outside the model domain [{a}, {b})")]
    OutOfDomain { t: f64, a: f64, b: f64 },
    #[error("density not positive semidefinite at t = {t} (h1 h2 - h3^2 = {defect})")]
    NonPsd { t: f64, defect: f64 },
    #[error("quadrature on [{lo}, {hi}] missed tolerance (estimate {err:e})")]
    QuadratureFailure { lo: f64, hi: f64, err: f64 },
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("no bracket for {what} at target {target:e}")]
    BracketFailure { what: &'static str, target: f64 },
    #[error("step underflow near t = {t}")]
    StepUnderflow { t: f64 },
    #[error("degenerate Weyl disk at t = {t} (|Im w21 conj(w22)| = {im:e})")]
    DegenerateDisk { t: f64, im: f64 },
    #[error("no convergence for z = {re}+{im}i after reaching t = {t} (radius {radius:e})")]
    NoConvergence { re: f64, im: f64, t: f64, radius: f64 },
    #[error("nested disk violation at t = {t} (excess {excess:e})")]
    NestingViolation { t: f64, excess: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis violated at t = {t}: {what}")]
    HypothesisViolated { t: f64, what: String },
    #[error("samples span {decades:.2} decades, need at least 4")]
    InsufficientSpan { decades: f64 },
    #[error("linear term beta = {beta} must be split off first")]
    BetaNonzero { beta: f64 },
    #[error("custom split leaves the admissible bracket at t = {t}")]
    SplitOutOfRange { t: f64 },
    #[error("malformed string: {0}")]
    MalformedString(String),
    #[error("config error in `{key}`: {msg}")]
    Config { key: String, msg: String },
}

pub type Result<T> = std::result::Result<T, WeylError>;
