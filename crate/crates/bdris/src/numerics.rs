//! Dense complex linear algebra used by every other module.
//!
//! Thin wrappers over `nalgebra`'s dense complex routines that pin the
//! conventions the estimators rely on: column-major vectorization,
//! singular values sorted descending, and explicit rank reporting in the
//! least-squares solver. All functions are pure; values are immutable
//! after construction and safe to share across threads.

use nalgebra::{Complex, DMatrix, DVector};
use std::f64::consts::PI;
use thiserror::Error;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;
/// Dense complex matrix (column-major storage).
pub type CMat = DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = DVector<C64>;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,
    #[error("entry count {got} does not match {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, got: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(
        "rank deficient system: rank {rank} < {cols} columns \
         (smallest kept ratio {ratio:.3e} below tolerance {tol:.3e})"
    )]
    RankDeficient {
        rank: usize,
        cols: usize,
        ratio: f64,
        tol: f64,
    },
}

/// Validated matrix construction from a row-major entry list.
///
/// Rejects empty dimensions, entry-count mismatches, and non-finite entries.
pub fn try_matrix(rows: usize, cols: usize, entries: &[C64]) -> Result<CMat, NumericsError> {
    if rows == 0 || cols == 0 {
        return Err(NumericsError::ZeroDimension);
    }
    if entries.len() != rows * cols {
        return Err(NumericsError::EntryCount {
            rows,
            cols,
            got: entries.len(),
        });
    }
    for (idx, e) in entries.iter().enumerate() {
        if !e.re.is_finite() || !e.im.is_finite() {
            return Err(NumericsError::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
    }
    Ok(CMat::from_row_slice(rows, cols, entries))
}

/// Unitary DFT matrix: entry `(m1,m2) = exp(-j*2*pi*m1*m2/n) / sqrt(n)`
/// (zero-based indices).
pub fn dft_matrix(n: usize) -> Result<CMat, NumericsError> {
    if n == 0 {
        return Err(NumericsError::ZeroDimension);
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CMat::from_fn(n, n, |r, c| {
        let phase = -2.0 * PI * (r as f64) * (c as f64) / (n as f64);
        C64::from_polar(scale, phase)
    }))
}

/// Kronecker product: block `(i,j)` of the result is `a[(i,j)] * b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-major vectorization: `vec(a)[j*rows + i] = a[(i,j)]`.
///
/// This is the single vectorization convention used repo-wide; the
/// identity `vec(A*X*B) = kron(B^T, A) * vec(X)` holds under it.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_of`]: reshape a length `rows*cols` vector column-major.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Result<CMat, NumericsError> {
    if v.len() != rows * cols {
        return Err(NumericsError::EntryCount {
            rows,
            cols,
            got: v.len(),
        });
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

/// Singular value decomposition `a = U * diag(s) * V^H` with `s` sorted
/// descending, `U` of shape `m x k`, `V` of shape `n x k`, `k = min(m,n)`.
///
/// Columns of `U` belonging to zero singular values are zero; every use
/// below truncates at a positive cutoff, so those columns never enter a
/// computation.
pub struct Svd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

/// Thin SVD by one-sided complex Jacobi rotations.
///
/// Chosen over the implicit-shift bidiagonal route because exactly
/// rank-deficient stacked regressors are routine here and the one-sided
/// sweep keeps full accuracy on clustered and zero singular values.
pub fn svd(a: &CMat) -> Svd {
    if a.nrows() < a.ncols() {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let m = a.nrows();
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = CMat::identity(n, n);
    let tol = 1e-15;

    for _sweep in 0..40 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C64::new(0.0, 0.0);
                for r in 0..m {
                    app += w[(r, p)].norm_sqr();
                    aqq += w[(r, q)].norm_sqr();
                    apq += w[(r, p)].conj() * w[(r, q)];
                }
                if apq.norm() <= tol * (app * aqq).sqrt() || apq.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase-align column q, then a real Jacobi rotation
                // annihilates the cross term.
                let phase = apq / C64::new(apq.norm(), 0.0);
                let g = apq.norm();
                let tau = (aqq - app) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..m {
                    let wq = w[(r, q)] * phase.conj();
                    let wp = w[(r, p)];
                    w[(r, p)] = wp * cs - wq * sn;
                    w[(r, q)] = (wp * sn + wq * cs) * phase;
                }
                for r in 0..n {
                    let vq = v[(r, q)] * phase.conj();
                    let vp = v[(r, p)];
                    v[(r, p)] = vp * cs - vq * sn;
                    v[(r, q)] = (vp * sn + vq * cs) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| w.column(j).iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = CMat::zeros(m, n);
    let mut v_sorted = CMat::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        if s > 0.0 {
            let inv = C64::new(1.0 / s, 0.0);
            for r in 0..m {
                u[(r, dst)] = w[(r, src)] * inv;
            }
        }
        for r in 0..n {
            v_sorted[(r, dst)] = v[(r, src)];
        }
    }
    Svd {
        u,
        singular_values,
        v: v_sorted,
    }
}

/// Default singular-value cutoff: `max(m,n) * eps * s_max`.
fn default_pinv_tol(rows: usize, cols: usize, s_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * s_max
}

/// Moore-Penrose pseudo-inverse via SVD.
///
/// Singular values at or below `tol` (absolute) are treated as zero; with
/// `tol = None` the cutoff is `max(m,n) * eps * s_max`. A zero matrix maps
/// to the zero matrix of transposed shape.
pub fn pinv(a: &CMat, tol: Option<f64>) -> CMat {
    let Svd {
        u,
        singular_values,
        v,
    } = svd(a);
    let s_max = singular_values.first().copied().unwrap_or(0.0);
    let cut = tol.unwrap_or_else(|| default_pinv_tol(a.nrows(), a.ncols(), s_max));
    let k = singular_values.len();
    let mut s_inv = CMat::zeros(k, k);
    for (i, &s) in singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            s_inv[(i, i)] = C64::new(1.0 / s, 0.0);
        }
    }
    &v * s_inv * u.adjoint()
}

/// Least-squares solve of `a * x = y` for full-column-rank `a` (`m >= n`).
///
/// Reports rank deficiency when the smallest singular value falls below
/// `rank_tol * s_max` (default `rank_tol = max(m,n) * eps`).
pub fn solve_ls(a: &CMat, y: &CVec, rank_tol: Option<f64>) -> Result<CVec, NumericsError> {
    if a.nrows() != y.len() {
        return Err(NumericsError::ShapeMismatch(format!(
            "lhs has {} rows but rhs has {} entries",
            a.nrows(),
            y.len()
        )));
    }
    if a.nrows() < a.ncols() {
        return Err(NumericsError::ShapeMismatch(format!(
            "underdetermined system: {} rows < {} cols",
            a.nrows(),
            a.ncols()
        )));
    }
    let tol = rank_tol.unwrap_or(a.nrows().max(a.ncols()) as f64 * f64::EPSILON);
    let (x, rank, ratio) = solve_min_norm(a, y, tol);
    if rank < a.ncols() {
        return Err(NumericsError::RankDeficient {
            rank,
            cols: a.ncols(),
            ratio,
            tol,
        });
    }
    Ok(x)
}

/// Minimum-norm least-squares solution of `a * x = y` via SVD truncation.
///
/// Returns `(x, rank, smallest_kept_ratio)` where `rank` counts singular
/// values above `rank_tol * s_max`. Unlike [`solve_ls`] this never fails on
/// rank deficiency; it returns the canonical pseudo-inverse solution.
pub fn solve_min_norm(a: &CMat, y: &CVec, rank_tol: f64) -> (CVec, usize, f64) {
    let Svd {
        u,
        singular_values,
        v,
    } = svd(a);
    let s_max = singular_values.first().copied().unwrap_or(0.0);
    let cut = rank_tol * s_max;
    let uh_y = u.adjoint() * y;
    let mut coeffs = CVec::zeros(singular_values.len());
    let mut rank = 0;
    let mut smallest_ratio = 0.0;
    for (i, &s) in singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            coeffs[i] = uh_y[i] / C64::new(s, 0.0);
            rank += 1;
            smallest_ratio = if s_max > 0.0 { s / s_max } else { 0.0 };
        }
    }
    (&v * coeffs, rank, smallest_ratio)
}

/// Frobenius norm.
pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

/// Condition number estimate `s_max / s_min` from the full SVD; infinite
/// when the smallest singular value underflows.
pub fn condition_number(a: &CMat) -> f64 {
    let s = svd(a).singular_values;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}
