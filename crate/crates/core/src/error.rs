use crate::model::Equation;
use crate::numerics::NewtonFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {quantity} = {value}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("infeasible {what} (margin {margin:e})")]
    Infeasible { what: &'static str, margin: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("steady state did not converge: {0}")]
    SteadyState(#[source] NewtonFailure),

    #[error("steady state verification failed: {equation:?} residual {residual:e}")]
    SteadyStateCheck { equation: Equation, residual: f64 },

    #[error(
        "transition did not converge ({source}); worst residual {residual:e} in {equation:?} at t={period}"
    )]
    Transition {
        #[source]
        source: NewtonFailure,
        period: usize,
        equation: Equation,
        residual: f64,
    },

    #[error("transition residual {residual:e} in {equation:?} at t={period} exceeds tolerance")]
    TransitionCheck {
        period: usize,
        equation: Equation,
        residual: f64,
    },

    #[error("shift bound violated: {bound} (lhs {lhs}, rhs {rhs})")]
    Bound {
        bound: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("integrity error: {0}")]
    Integrity(String),
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64) -> Self {
        Error::Domain { quantity, value }
    }
}
