//! Dense solves for the tiny (k ≤ 3) normal-equation systems.

use crate::scalar::Scalar;

pub(crate) type Matrix<T> = Vec<Vec<T>>;

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
/// `None` when a pivot is negligible relative to the matrix scale.
pub(crate) fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let k = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) || !scale.is_finite() {
        return None;
    }
    let threshold = scale * T::epsilon() * T::from_usize(4 * k).unwrap();
    let mut m: Matrix<T> = a.clone();
    let mut x = b.to_vec();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[pivot][col].abs() > threshold) {
            return None;
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..k {
            let factor = m[row][col] / m[col][col];
            for c in col..k {
                let v = m[col][c];
                m[row][c] = m[row][c] - factor * v;
            }
            x[row] = x[row] - factor * x[col];
        }
    }
    for row in (0..k).rev() {
        let mut acc = x[row];
        for c in row + 1..k {
            acc = acc - m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub(crate) fn invert<T: Scalar>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let k = a.len();
    let mut cols = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![T::zero(); k];
        e[j] = T::one();
        cols.push(solve(a, &e)?);
    }
    Some(
        (0..k)
            .map(|i| (0..k).map(|j| cols[j][i]).collect())
            .collect(),
    )
}

/// Jacobi-scaled solve for symmetric positive semi-definite systems, so the
/// singularity test does not depend on parameter units.
pub(crate) fn solve_spd<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let d = inv_sqrt_diag(a)?;
    let y = solve(
        &scaled(a, &d),
        &b.iter().zip(&d).map(|(&v, &s)| v * s).collect::<Vec<_>>(),
    )?;
    Some(y.iter().zip(&d).map(|(&v, &s)| v * s).collect())
}

pub(crate) fn invert_spd<T: Scalar>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let d = inv_sqrt_diag(a)?;
    let inv = invert(&scaled(a, &d))?;
    Some(
        inv.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| v * d[i] * d[j])
                    .collect()
            })
            .collect(),
    )
}

fn inv_sqrt_diag<T: Scalar>(a: &Matrix<T>) -> Option<Vec<T>> {
    (0..a.len())
        .map(|i| (a[i][i] > T::zero() && a[i][i].is_finite()).then(|| a[i][i].sqrt().recip()))
        .collect()
}

fn scaled<T: Scalar>(a: &Matrix<T>, d: &[T]) -> Matrix<T> {
    a.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| v * d[i] * d[j])
                .collect()
        })
        .collect()
}

/// `JᵀJ` for a Jacobian stored row-per-observation.
pub(crate) fn gram<T: Scalar>(jac: &[Vec<T>], k: usize) -> Matrix<T> {
    let mut g = vec![vec![T::zero(); k]; k];
    for row in jac {
        for i in 0..k {
            for j in i..k {
                g[i][j] = g[i][j] + row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[i][j] = g[j][i];
        }
    }
    g
}

/// `Jᵀv`.
pub(crate) fn project<T: Scalar>(jac: &[Vec<T>], v: &[T], k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k];
    for (row, &vi) in jac.iter().zip(v) {
        for j in 0..k {
            out[j] = out[j] + row[j] * vi;
        }
    }
    out
}

/// Ordinary least squares `min ‖X·β − y‖²` via the normal equations.
pub(crate) fn least_squares<T: Scalar>(design: &[Vec<T>], y: &[T]) -> Option<Vec<T>> {
    let k = design.first()?.len();
    solve(&gram(design, k), &project(design, y, k))
}
