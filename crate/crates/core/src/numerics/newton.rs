//! Damped Newton iteration with a finite-difference Jacobian.

use super::{fd_jacobian_at, NewtonError, NewtonOptions};

/// Converged Newton result.
#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Residual infinity-norm at the start and after every accepted step.
    pub history: Vec<f64>,
    /// Iterates including `x0`; empty unless `record_iterates` was set.
    pub iterates: Vec<Vec<f64>>,
}

/// A failed solve together with the last iterate it reached.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{kind} after {iterations} iterations (residual norm {residual_norm:e})")]
pub struct NewtonFailure {
    pub kind: NewtonError,
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Solves `f(x) = 0` from `x0`.
///
/// Each step solves `J dx = -f(x)` with a forward-difference Jacobian and an
/// LU factorization, then backtracks by `damping` until the residual
/// infinity-norm strictly decreases.
pub fn newton_solve<F>(
    f: F,
    x0: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonSolution, NewtonFailure>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    assert!(
        opts.tol > 0.0 && opts.max_iter >= 1,
        "invalid Newton options"
    );

    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut history = Vec::new();
    let mut iterates = Vec::new();
    if opts.record_iterates {
        iterates.push(x.clone());
    }

    let fail = |kind, x: Vec<f64>, norm, iterations, history: Vec<f64>| NewtonFailure {
        kind,
        x,
        residual_norm: norm,
        iterations,
        history,
    };

    if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
        return Err(fail(
            NewtonError::NonFiniteResidual { index: i },
            x,
            f64::NAN,
            0,
            history,
        ));
    }
    let mut norm = inf_norm(&fx);
    history.push(norm);

    let mut iterations = 0;
    while norm > opts.tol {
        if iterations == opts.max_iter {
            return Err(fail(
                NewtonError::MaxIterations,
                x,
                norm,
                iterations,
                history,
            ));
        }

        let step = fd_jacobian_at(&f, &x, &fx, opts)
            .and_then(|jac| jac.lu(opts.min_pivot))
            .map(|lu| {
                let rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
                lu.solve(&rhs)
            });
        let dx = match step {
            Ok(dx) => dx,
            Err(kind) => return Err(fail(kind, x, norm, iterations, history)),
        };

        if inf_norm(&dx) <= opts.min_step * inf_norm(&x).max(1.0) {
            return Err(fail(NewtonError::Stalled, x, norm, iterations, history));
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + scale * d).collect();
            let ft = f(&trial);
            if ft.iter().all(|v| v.is_finite()) {
                let trial_norm = inf_norm(&ft);
                if trial_norm < norm {
                    accepted = Some((trial, ft, trial_norm));
                    break;
                }
            }
            scale *= opts.damping;
        }

        let Some((xn, fxn, nn)) = accepted else {
            return Err(fail(NewtonError::LineSearch, x, norm, iterations, history));
        };
        x = xn;
        fx = fxn;
        norm = nn;
        iterations += 1;
        history.push(norm);
        if opts.record_iterates {
            iterates.push(x.clone());
        }
    }

    Ok(NewtonSolution {
        x,
        iterations,
        residual_norm: norm,
        history,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_square_root() {
        let sol = newton_solve(
            |x: &[f64]| vec![x[0] * x[0] - 4.0],
            &[3.0],
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-10);
        assert!(sol.residual_norm <= 1e-10);
    }

    #[test]
    fn already_converged_takes_zero_steps() {
        let sol = newton_solve(
            |x: &[f64]| vec![x[0] - 1.0],
            &[1.0],
            &NewtonOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn iteration_cap_returns_last_iterate() {
        let opts = NewtonOptions {
            max_iter: 1,
            ..NewtonOptions::default()
        };
        let err = newton_solve(|x: &[f64]| vec![x[0].exp() - 1e6], &[0.0], &opts).unwrap_err();
        assert_eq!(err.kind, NewtonError::MaxIterations);
        assert_eq!(err.iterations, 1);
        assert!(err.x[0] > 0.0);
    }

    #[test]
    fn flat_residual_is_singular() {
        let err =
            newton_solve(|_: &[f64]| vec![1.0], &[0.0], &NewtonOptions::default()).unwrap_err();
        assert!(matches!(err.kind, NewtonError::SingularJacobian { .. }));
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let err = newton_solve(
            |x: &[f64]| vec![x[0].ln()],
            &[-1.0],
            &NewtonOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.kind, NewtonError::NonFiniteResidual { index: 0 });
    }

    #[test]
    fn line_search_backtracks_out_of_domain() {
        // a full step from 0.1 lands at a negative x where ln is undefined
        let f = |x: &[f64]| vec![x[0].ln() + 1.0 / x[0] - 1.0 - 0.2];
        let sol = newton_solve(f, &[0.2], &NewtonOptions::default()).unwrap();
        assert!(sol.x[0] > 0.0);
        assert!(sol.history.windows(2).all(|w| w[1] < w[0]));
    }
}
