//! Small dense least-squares solver for tall `n x 3` systems.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative pivot threshold below which a column of `R` counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Solves `min_M ||B - A M||` for `A` (n x 3) and `B` (n x 3) with Householder
/// QR. Rows of `A` and `B` are the rows of the system. Fails with
/// [`Error::RankDeficient`] when `A` does not have full column rank.
pub fn least_squares_3(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<[[f64; 3]; 3]> {
    assert_eq!(a.len(), b.len(), "row count mismatch");
    let rows = a.len();
    // Column-major working copies.
    let mut q: [Vec<f64>; 3] = core::array::from_fn(|j| a.iter().map(|r| r[j]).collect());
    let mut rhs: [Vec<f64>; 3] = core::array::from_fn(|j| b.iter().map(|r| r[j]).collect());
    let mut r = [[0.0f64; 3]; 3];

    let scale = q.iter().map(|c| norm(c)).fold(0.0f64, f64::max);
    if rows < 3 || scale == 0.0 {
        return Err(Error::RankDeficient {
            rank: rank_hint(rows, scale),
            rows,
        });
    }

    for k in 0..3 {
        let alpha = {
            let col = &q[k][k..];
            let nrm = norm(col);
            if nrm <= RANK_TOL * scale {
                return Err(Error::RankDeficient { rank: k, rows });
            }
            if col[0] > 0.0 {
                -nrm
            } else {
                nrm
            }
        };
        // v = x - alpha e1, stored in place of column k.
        let mut v: Vec<f64> = q[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        r[k][k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k + 1..3 {
            let col = &mut q[j][k..];
            let s = 2.0 * dot(&v, col) / vnorm2;
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
            r[k][j] = col[0];
        }
        for col in rhs.iter_mut() {
            let col = &mut col[k..];
            let s = 2.0 * dot(&v, col) / vnorm2;
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
        }
    }

    // Back substitution R M = Q^T B (top 3 rows).
    let mut m = [[0.0f64; 3]; 3];
    for c in 0..3 {
        for i in (0..3).rev() {
            let mut s = rhs[c][i];
            for j in i + 1..3 {
                s -= r[i][j] * m[j][c];
            }
            m[i][c] = s / r[i][i];
        }
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::RankDeficient { rank: 2, rows });
    }
    Ok(m)
}

fn rank_hint(rows: usize, scale: f64) -> usize {
    if scale == 0.0 {
        0
    } else {
        rows.min(3)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Ordinary least squares line `y = intercept + slope x`; returns
/// `(slope, intercept, r_squared)`. `None` when `x` has zero variance.
pub fn simple_regression(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let e = b - (intercept + slope * a);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some((slope, intercept, r2))
}
