//! Thin Householder least squares for tall matrices with four columns.

use nalgebra::Matrix4;

pub(crate) const COLS: usize = 4;

pub(crate) struct Solution {
    pub beta: [f64; COLS],
    pub sse: f64,
    /// 2-norm condition number of the design matrix.
    pub condition: f64,
}

/// Minimizes `|A beta - y|` for a column-major `n x 4` matrix `a`.
///
/// `a` and `y` are overwritten with the Householder vectors and `Q^T y`.
/// Returns `None` when `R` is singular; otherwise the caller is expected to
/// check `condition`.
pub(crate) fn solve_in_place(a: &mut [f64], y: &mut [f64]) -> Option<Solution> {
    let n = y.len();
    debug_assert_eq!(a.len(), COLS * n);
    debug_assert!(n >= COLS);
    let mut r = [[0.0; COLS]; COLS];

    for k in 0..COLS {
        let (head, tail) = a.split_at_mut((k + 1) * n);
        let v = &mut head[k * n + k..(k + 1) * n];
        let below: f64 = v[1..].iter().map(|x| x * x).sum();
        let norm = (v[0] * v[0] + below).sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vv = v[0] * v[0] + below;
        r[k][k] = alpha;
        if vv == 0.0 {
            continue;
        }
        let reflect = |w: &mut [f64]| {
            let dot: f64 = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vv;
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi -= f * vi;
            }
        };
        for j in 0..COLS - k - 1 {
            reflect(&mut tail[j * n + k..(j + 1) * n]);
        }
        reflect(&mut y[k..]);
    }
    for k in 0..COLS {
        for (j, row) in r[k].iter_mut().enumerate().skip(k + 1) {
            *row = a[j * n + k];
        }
    }

    let rm = Matrix4::from_fn(|i, j| r[i][j]);
    let sv = rm.singular_values();
    let smin = sv.min();
    let condition = if smin > 0.0 {
        sv.max() / smin
    } else {
        f64::INFINITY
    };

    let mut beta = [0.0; COLS];
    for k in (0..COLS).rev() {
        if r[k][k] == 0.0 {
            return None;
        }
        let s: f64 = (k + 1..COLS).map(|j| r[k][j] * beta[j]).sum();
        beta[k] = (y[k] - s) / r[k][k];
    }
    let sse = y[COLS..].iter().map(|x| x * x).sum();
    Some(Solution {
        beta,
        sse,
        condition,
    })
}
