//! Direct solvers for the banded systems the implicit time steps produce.
//!
//! Both routines are plain elimination without pivoting. The matrices they
//! see are identity-plus-positive-(semi)definite-stiffness, so the pivots
//! stay bounded away from zero and pivoting would only cost time.

use crate::error::{Error, Result};

/// Thomas algorithm for a tridiagonal system.
///
/// `lower[i]` sits on row `i + 1`, `upper[i]` on row `i`; `diag` has the full
/// length `n`. Inputs are copied, so repeated solves with the same matrix are
/// allowed.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n {
        return Err(Error::Internal("tridiagonal band sizes inconsistent".into()));
    }
    let mut d = diag.to_vec();
    let mut b = rhs.to_vec();
    for i in 1..n {
        if d[i - 1] == 0.0 {
            return Err(Error::Internal("zero pivot in tridiagonal solve".into()));
        }
        let m = lower[i - 1] / d[i - 1];
        d[i] -= m * upper[i - 1];
        b[i] -= m * b[i - 1];
    }
    if d[n - 1] == 0.0 {
        return Err(Error::Internal("zero pivot in tridiagonal solve".into()));
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (b[i] - upper[i] * x[i + 1]) / d[i];
    }
    Ok(x)
}

/// Banded LU solve for a pentadiagonal system (bandwidth 2, no pivoting).
///
/// Band layout: row `i` holds `l2[i-2], l1[i-1], d0[i], u1[i], u2[i]` where
/// each band vector only stores the entries that exist. Valid for any
/// `n >= 1`, so the smallest interior systems (three unknowns at the minimum
/// grid size) are handled by the same code path.
pub fn solve_pentadiagonal(
    l2: &[f64],
    l1: &[f64],
    d0: &[f64],
    u1: &[f64],
    u2: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = d0.len();
    let short = |k: usize| n.saturating_sub(k);
    if l1.len() != short(1) || u1.len() != short(1) || l2.len() != short(2) || u2.len() != short(2) || rhs.len() != n {
        return Err(Error::Internal("pentadiagonal band sizes inconsistent".into()));
    }
    let mut d0 = d0.to_vec();
    let mut u1 = u1.to_vec();
    let u2 = u2.to_vec();
    let mut l1 = l1.to_vec();
    let mut b = rhs.to_vec();

    for i in 0..n {
        let piv = d0[i];
        if piv == 0.0 {
            return Err(Error::Internal("zero pivot in pentadiagonal solve".into()));
        }
        if i + 1 < n {
            let m = l1[i] / piv;
            d0[i + 1] -= m * u1[i];
            if i + 2 < n {
                u1[i + 1] -= m * u2[i];
            }
            b[i + 1] -= m * b[i];
        }
        if i + 2 < n {
            let m = l2[i] / piv;
            l1[i + 1] -= m * u1[i];
            d0[i + 2] -= m * u2[i];
            b[i + 2] -= m * b[i];
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d0[i];
    }
    Ok(x)
}
