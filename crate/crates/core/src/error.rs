use thiserror::Error;

/// Errors raised by the transform, family, estimator and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GplmError {
    /// Unknown names, out-of-range settings and other invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    /// A non-finite value reached a computation that requires finite input.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A mean value outside the family's domain, e.g. a binomial mean of 1.
    #[error("domain error: {0}")]
    Domain(String),

    /// The weighted normal matrix of the linear step is not positive definite.
    #[error("rank error: weighted normal matrix is singular ({0})")]
    Rank(String),

    /// Fisher scoring produced non-finite iterates.
    #[error("scoring diverged in {step} at outer iteration {iteration}: {detail}")]
    ScoringDivergence {
        step: &'static str,
        iteration: usize,
        detail: String,
    },

    /// The penalized criterion kept decreasing; the run was abandoned.
    #[error("criterion decreased without the iteration settling for {consecutive} consecutive iterations (stopped at iteration {iteration})")]
    CriterionDecrease { iteration: usize, consecutive: usize },
}

impl GplmError {
    /// Attach an outer iteration index to a step error.
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            GplmError::ScoringDivergence { step, detail, .. } => GplmError::ScoringDivergence {
                step,
                iteration,
                detail,
            },
            GplmError::Rank(msg) => GplmError::Rank(format!("{msg}, outer iteration {iteration}")),
            GplmError::Numeric(msg) => {
                GplmError::Numeric(format!("{msg} (outer iteration {iteration})"))
            }
            other => other,
        }
    }

    /// True for failures of the numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GplmError::Numeric(_)
                | GplmError::Rank(_)
                | GplmError::ScoringDivergence { .. }
                | GplmError::CriterionDecrease { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, GplmError>;
