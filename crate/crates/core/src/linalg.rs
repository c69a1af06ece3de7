//! Dense linear algebra at the scale this crate needs (n <= 50): Gaussian
//! elimination with partial pivoting and a rank estimate. Generic
//! eigensolvers are deliberately avoided; fixed vectors of stochastic
//! matrices are obtained by direct solves on communicating classes.

use crate::error::{ErgoError, Result};

/// Solves `A x = b` in place for a square system; `a` is row-major.
pub fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-13 {
            return Err(ErgoError::NumericalDegeneracy(format!(
                "singular system at column {col}"
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Numerical rank via row echelon reduction with a relative pivot threshold.
pub fn rank(mut a: Vec<Vec<f64>>, rel_tol: f64) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    let tol = rel_tol * scale;
    let mut r = 0usize;
    for c in 0..cols {
        let pivot = (r..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()));
        let Some(p) = pivot else { break };
        if a[p][c].abs() <= tol {
            continue;
        }
        a.swap(r, p);
        for i in 0..rows {
            if i != r && a[i][c] != 0.0 {
                let f = a[i][c] / a[r][c];
                for k in c..cols {
                    a[i][k] -= f * a[r][k];
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}
