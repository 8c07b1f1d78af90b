//! Dense Newton machinery shared by the steady-state and transition solvers.

mod jacobian;
mod linalg;
mod newton;

pub use jacobian::{fd_jacobian, fd_jacobian_at};
pub use linalg::{DenseMatrix, LuFactors};
pub use newton::{newton_solve, NewtonFailure, NewtonSolution};

pub(crate) use newton::inf_norm;

/// Nonzero pattern hint: entry `(i, j)` may be nonzero only when
/// `i <= j + lower` and `j <= i + upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    /// Target for the residual infinity-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative forward-difference step; column `j` uses `fd_step * max(1, |x_j|)`.
    pub fd_step: f64,
    /// Backtracking factor applied to a rejected step.
    pub damping: f64,
    pub max_halvings: usize,
    /// Full Newton steps shorter than this (relative to `max(1, |x|)`) count as a stall.
    pub min_step: f64,
    /// Pivots below this magnitude make the Jacobian singular.
    pub min_pivot: f64,
    /// Optional sparsity hint used to group Jacobian columns.
    pub band: Option<Band>,
    pub record_iterates: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            fd_step: f64::EPSILON.sqrt(),
            damping: 0.5,
            max_halvings: 30,
            min_step: 1e-14,
            min_pivot: 1e-14,
            band: None,
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NewtonError {
    #[error("iteration limit reached")]
    MaxIterations,
    #[error("singular Jacobian: pivot {pivot:e} in column {column}")]
    SingularJacobian { column: usize, pivot: f64 },
    #[error("non-finite residual component {index}")]
    NonFiniteResidual { index: usize },
    #[error("non-finite Jacobian column {column}")]
    NonFiniteJacobian { column: usize },
    #[error("line search could not reduce the residual")]
    LineSearch,
    #[error("Newton step below the minimum step length")]
    Stalled,
}
