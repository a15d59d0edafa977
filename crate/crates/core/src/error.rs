use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("component {index} is negative ({value:e})")]
    NegativeComponent { index: usize, value: f64 },

    #[error("components sum to {observed_sum:.17e}, expected 1")]
    MassDeviation { observed_sum: f64 },

    #[error("component {index} is not finite")]
    NonFiniteComponent { index: usize },

    #[error("a simplex state needs at least 2 components, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("model `{model}` returned a non-finite fitness at index {index}")]
    ModelEvaluation { model: String, index: usize },

    #[error("model `{model}` evaluated outside its domain: {reason}")]
    Domain { model: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("state became non-finite")]
    Divergence,

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("reference solution did not converge (last refinement difference {difference:e})")]
    OracleNotConverged { difference: f64 },

    #[error("component {index} vanished at step {step}")]
    ZeroComponent { index: usize, step: usize },

    #[error("payoff matrix line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("step {step} (t = {t}): {source}")]
    AtStep {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize, t: f64) -> Self {
        Error::AtStep {
            step,
            t,
            source: Box::new(self),
        }
    }

    /// The innermost error, with step annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::ModelEvaluation { .. }
                | Error::Domain { .. }
                | Error::Divergence
                | Error::StepSizeUnderflow { .. }
                | Error::OracleNotConverged { .. }
                | Error::ZeroComponent { .. }
        )
    }
}
