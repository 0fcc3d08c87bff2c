use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-finite state appeared; `t` is the last time with a finite state.
    #[error("integration diverged after t = {t}")]
    Divergence { t: f64 },

    #[error("step size {step:e} fell below the floor at t = {t} (stiff or discontinuous right-hand side)")]
    StepUnderflow { t: f64, step: f64 },

    #[error("period map is degenerate at eps = 0 (every point is fixed)")]
    DegenerateMap,

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("singular Jacobian at {at:?}; the zero may be degenerate")]
    SingularJacobian { at: Vec<f64> },

    #[error("{point:?} is outside the differentiable domain: {reason}")]
    Domain { point: Vec<f64>, reason: String },

    #[error("no closed form available: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
