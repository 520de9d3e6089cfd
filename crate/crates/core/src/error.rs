use thiserror::Error;

/// Errors raised by the data model, the solvers and the calibration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("DegenerateClass: task {task} class {class} has {what}")]
    DegenerateClass {
        task: usize,
        class: usize,
        what: &'static str,
    },

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("AlphaTooSmall: alpha = {alpha} must exceed the spectral norm {norm} of the weight matrix")]
    AlphaTooSmall { alpha: f64, norm: f64 },

    #[error("SingularSystem: {0}")]
    SingularSystem(String),

    #[error("NoConvergence: {what} (residual {residual:e} after {iterations} iterations)")]
    NoConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("InvalidRegion: {0}")]
    InvalidRegion(String),

    #[error("Singular: {0}")]
    Singular(String),

    #[error("DivergentSeries: spectral radius {radius} of the second-order series is not below 1")]
    DivergentSeries { radius: f64 },

    #[error("NegativeVariance: quadratic form {value:e} is negative")]
    NegativeVariance { value: f64 },

    #[error("IndefiniteLambda: task-relatedness matrix has eigenvalue {eigenvalue:e}")]
    IndefiniteLambda { eigenvalue: f64 },

    #[error("DomainError: {0}")]
    DomainError(String),

    #[error("InsufficientData: task {task} class {class} has {count} labeled samples, at least 2 required")]
    InsufficientData {
        task: usize,
        class: usize,
        count: usize,
    },

    #[error("DegenerateTask: task {task} has class mean difference norm {norm:e}")]
    DegenerateTask { task: usize, norm: f64 },

    #[error("GenuineClassUnknown: task {task} has probabilistic labels without ground-truth classes")]
    GenuineClassUnknown { task: usize },

    #[error("IllConditioned: condition number {condition:e} exceeds {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("DegenerateSeparation: m2 = {m2} must exceed m1 = {m1}")]
    DegenerateSeparation { m1: f64, m2: f64 },

    #[error("NoValidAlpha: every grid point failed ({0})")]
    NoValidAlpha(String),

    #[error("Unreachable: {0}")]
    Unreachable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short variant name, used in CLI messages and trial logs.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::DegenerateClass { .. } => "DegenerateClass",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::AlphaTooSmall { .. } => "AlphaTooSmall",
            Error::SingularSystem(_) => "SingularSystem",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InvalidRegion(_) => "InvalidRegion",
            Error::Singular(_) => "Singular",
            Error::DivergentSeries { .. } => "DivergentSeries",
            Error::NegativeVariance { .. } => "NegativeVariance",
            Error::IndefiniteLambda { .. } => "IndefiniteLambda",
            Error::DomainError(_) => "DomainError",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateTask { .. } => "DegenerateTask",
            Error::GenuineClassUnknown { .. } => "GenuineClassUnknown",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::DegenerateSeparation { .. } => "DegenerateSeparation",
            Error::NoValidAlpha(_) => "NoValidAlpha",
            Error::Unreachable(_) => "Unreachable",
        }
    }
}
