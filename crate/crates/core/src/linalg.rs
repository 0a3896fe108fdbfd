//! Banded solvers used by the implicit diffusion step and the eigen-solvers.

use crate::error::{Error, Result};

/// Solve a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` couples row `i` to `i - 1` (ignored for `i = 0`), `upper[i]`
/// couples row `i` to `i + 1` (ignored for the last row). On return `rhs`
/// holds the solution.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
) -> Result<()> {
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    if diag.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::config(
            "tridiagonal bands do not match the right-hand side",
        ));
    }
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(singular(0, denom));
    }
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(singular(i, denom));
        }
        c[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Solve a tridiagonal system with periodic wrap-around coupling.
///
/// `lower[0]` couples the first row to the last unknown and `upper[n - 1]`
/// couples the last row to the first. Uses the Sherman-Morrison correction.
pub fn solve_cyclic_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
) -> Result<()> {
    let n = rhs.len();
    if n < 3 {
        return Err(Error::config(
            "cyclic tridiagonal system needs at least 3 unknowns",
        ));
    }
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let mut lo = lower.to_vec();
    lo[0] = 0.0;
    let mut up = upper.to_vec();
    up[n - 1] = 0.0;

    solve_tridiagonal(&lo, &d, &up, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    solve_tridiagonal(&lo, &d, &up, &mut u)?;

    let fact = (rhs[0] + beta * rhs[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (x, z) in rhs.iter_mut().zip(&u) {
        *x -= fact * z;
    }
    Ok(())
}

fn singular(row: usize, pivot: f64) -> Error {
    Error::Numerical {
        msg: format!("zero or non-finite pivot in tridiagonal solve at row {row}"),
        trace: vec![pivot],
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
///
/// Returns the iteration count. The starting guess is whatever `x` holds.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = rel_tol * rel_tol * dot(b, b).max(f64::MIN_POSITIVE);
    let mut history = Vec::new();
    for iter in 0..max_iter {
        if rr <= target {
            return Ok(iter);
        }
        apply(&p, &mut ax);
        let alpha = rr / dot(&p, &ax);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        let rr_new = dot(&r, &r);
        history.push(rr_new.sqrt());
        if history.len() > 8 {
            history.remove(0);
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    if rr <= target {
        return Ok(max_iter);
    }
    Err(Error::Numerical {
        msg: format!("conjugate gradients did not converge in {max_iter} iterations"),
        trace: history,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply_tri(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64], cyclic: bool) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += lower[i] * x[i - 1];
                } else if cyclic {
                    v += lower[0] * x[n - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x[i + 1];
                } else if cyclic {
                    v += upper[n - 1] * x[0];
                }
                v
            })
            .collect()
    }

    #[test]
    fn thomas_recovers_known_solution() {
        let n = 9;
        let lower = vec![-1.0; n];
        let upper = vec![-1.3; n];
        let diag = vec![4.0; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let mut b = apply_tri(&lower, &diag, &upper, &x, false);
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_recovers_known_solution() {
        let n = 12;
        let lower = vec![-0.7; n];
        let upper = vec![-1.1; n];
        let diag = vec![3.5; n];
        let x: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let mut b = apply_tri(&lower, &diag, &upper, &x, true);
        solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut b = vec![1.0, 1.0];
        let err = solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut b).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn cg_solves_laplacian() {
        let n = 30;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        conjugate_gradient(apply, &b, &mut x, 1e-12, 200).unwrap();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        for v in ax {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }
}
