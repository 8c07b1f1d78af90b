//! Forward-difference Jacobians.

use rayon::prelude::*;

use super::{Band, DenseMatrix, NewtonError, NewtonOptions};

fn step_for(x_j: f64, opts: &NewtonOptions) -> f64 {
    opts.fd_step * x_j.abs().max(1.0)
}

/// Forward-difference Jacobian of `f` at `x`.
///
/// Column `j` uses the step `fd_step * max(1, |x_j|)`. Columns are evaluated in
/// parallel, so `f` must tolerate concurrent calls.
pub fn fd_jacobian<F>(f: &F, x: &[f64], opts: &NewtonOptions) -> Result<DenseMatrix, NewtonError>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let fx = f(x);
    if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
        return Err(NewtonError::NonFiniteResidual { index: i });
    }
    fd_jacobian_at(f, x, &fx, opts)
}

/// Same as [`fd_jacobian`] but reuses an already evaluated `f(x)`.
pub fn fd_jacobian_at<F>(
    f: &F,
    x: &[f64],
    fx: &[f64],
    opts: &NewtonOptions,
) -> Result<DenseMatrix, NewtonError>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    match opts.band {
        Some(band) => banded(f, x, fx, band, opts),
        None => dense(f, x, fx, opts),
    }
}

fn dense<F>(f: &F, x: &[f64], fx: &[f64], opts: &NewtonOptions) -> Result<DenseMatrix, NewtonError>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let n = x.len();
    let m = fx.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = step_for(x[j], opts);
            let mut xp = x.to_vec();
            xp[j] += h;
            let fp = f(&xp);
            fp.iter().zip(fx).map(|(a, b)| (a - b) / h).collect()
        })
        .collect();

    let mut jac = DenseMatrix::zeros(m, n);
    for (j, col) in columns.iter().enumerate() {
        if col.len() != m || col.iter().any(|v| !v.is_finite()) {
            return Err(NewtonError::NonFiniteJacobian { column: j });
        }
        for (i, v) in col.iter().enumerate() {
            jac[(i, j)] = *v;
        }
    }
    Ok(jac)
}

// Columns further apart than the band width never share a row, so they can be
// perturbed together.
fn banded<F>(
    f: &F,
    x: &[f64],
    fx: &[f64],
    band: Band,
    opts: &NewtonOptions,
) -> Result<DenseMatrix, NewtonError>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let n = x.len();
    let m = fx.len();
    let stride = band.lower + band.upper + 1;
    let groups: Vec<(usize, Vec<f64>)> = (0..stride.min(n))
        .into_par_iter()
        .map(|g| {
            let mut xp = x.to_vec();
            for j in (g..n).step_by(stride) {
                xp[j] += step_for(x[j], opts);
            }
            (g, f(&xp))
        })
        .collect();

    let mut jac = DenseMatrix::zeros(m, n);
    for (g, fp) in groups {
        if fp.len() != m {
            return Err(NewtonError::NonFiniteJacobian { column: g });
        }
        for j in (g..n).step_by(stride) {
            let h = step_for(x[j], opts);
            let lo = j.saturating_sub(band.upper);
            let hi = (j + band.lower).min(m.saturating_sub(1));
            for i in lo..=hi {
                let d = (fp[i] - fx[i]) / h;
                if !d.is_finite() {
                    return Err(NewtonError::NonFiniteJacobian { column: j });
                }
                jac[(i, j)] = d;
            }
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_gives_identity() {
        let f = |x: &[f64]| x.to_vec();
        let jac = fd_jacobian(&f, &[0.3, -2.0, 7.5], &NewtonOptions::default()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((jac[(i, j)] - expected).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn product_map_matches_analytic_derivative() {
        let f = |x: &[f64]| vec![x[0] * x[1], x[0] * x[0]];
        let jac = fd_jacobian(&f, &[2.0, 3.0], &NewtonOptions::default()).unwrap();
        let expected = [[3.0, 2.0], [4.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((jac[(i, j)] - expected[i][j]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn non_finite_column_is_named() {
        let f = |x: &[f64]| vec![x[0], if x[1] > 1.0 { f64::NAN } else { x[1] }];
        let err = fd_jacobian(&f, &[0.0, 1.0], &NewtonOptions::default()).unwrap_err();
        assert_eq!(err, NewtonError::NonFiniteJacobian { column: 1 });
    }

    #[test]
    fn banded_grouping_agrees_with_dense() {
        // tridiagonal-in-blocks map: row i touches i-2..=i+1
        let f = |x: &[f64]| {
            let n = x.len();
            (0..n)
                .map(|i| {
                    let a = if i >= 2 { x[i - 2] } else { 0.0 };
                    let c = if i + 1 < n { x[i + 1] } else { 0.0 };
                    x[i].powi(3) + a * x[i] - c.sin()
                })
                .collect::<Vec<_>>()
        };
        let x: Vec<f64> = (0..17).map(|i| 0.1 * i as f64 - 0.4).collect();
        let dense = fd_jacobian(&f, &x, &NewtonOptions::default()).unwrap();
        let opts = NewtonOptions {
            band: Some(Band { lower: 2, upper: 1 }),
            ..NewtonOptions::default()
        };
        let banded = fd_jacobian(&f, &x, &opts).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                assert!((dense[(i, j)] - banded[(i, j)]).abs() < 1e-12, "({i},{j})");
            }
        }
    }
}
