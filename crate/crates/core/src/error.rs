use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs a power-of-two point count >= 4, got {0}")]
    BadPointCount(usize),

    #[error("grid half-width must be positive and finite, got {0}")]
    BadHalfWidth(f64),

    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("Lebesgue exponent must be >= 1, got {0}")]
    BadLebesgueExponent(f64),

    #[error("exponent {name} = {value} is outside its admissible range ({range})")]
    ExponentOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("exponent relation is degenerate: {0}")]
    DegenerateExponent(&'static str),

    #[error("trajectory needs at least {needed} time slices, got {got}")]
    TooFewSlices { needed: usize, got: usize },

    #[error("trajectory times must be strictly increasing")]
    TimesNotIncreasing,

    #[error("weight t^{alpha} is not integrable at t = 0")]
    SingularWeight { alpha: f64 },

    #[error("time {0} is not on the trajectory mesh")]
    TimeNotOnMesh(f64),

    #[error("time {t} outside trajectory span [{start}, {end}]")]
    TimeOutOfSpan { t: f64, start: f64, end: f64 },

    #[error("target L2 size {target} is unreachable (achievable range (0, {max}])")]
    TargetUnreachable { target: f64, max: f64 },

    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),

    #[error("invalid solver configuration: {0}")]
    BadSolverConfig(String),

    #[error("blow-up guard tripped at t = {t}: sup|u| = {amplitude:e} exceeds ceiling {ceiling:e}")]
    BlowUp { t: f64, amplitude: f64, ceiling: f64 },

    #[error("Picard iteration did not contract: {iterations} iterations, last relative change {last_change:e}")]
    PicardNotConverged { iterations: usize, last_change: f64 },

    #[error("|t| = {t} is below the factorization cutoff {t_min}")]
    TimeTooSmall { t: f64, t_min: f64 },

    #[error("trajectories share no common time slices")]
    DisjointTrajectories,

    #[error("invalid plan input: {0}")]
    BadPlan(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
