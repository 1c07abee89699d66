//! Small dense linear algebra: Cholesky solves with a ridge fallback and a
//! cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Everything here runs on restricted systems (support sizes, or the p ≤ 14
//! enumeration guard), so plain O(k³) routines are exact enough and keep the
//! crate free of LAPACK bindings. All routines are sequential and
//! deterministic.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` if a
/// pivot is non-positive or non-finite (matrix not numerically PD).
pub(crate) fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag.is_finite() && diag > 0.0) {
            return None;
        }
        let d = diag.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

/// Solve `L Lᵀ x = b` given the lower factor `L`.
pub(crate) fn chol_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[(k, i)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Solve the SPD system `a x = b`. If the plain factorization fails, retry
/// once with `ridge` added to the diagonal; the flag in the result records
/// whether the fallback was used.
pub(crate) fn solve_spd(
    a: &Array2<f64>,
    b: &Array1<f64>,
    ridge: f64,
) -> Result<(Array1<f64>, bool)> {
    if let Some(l) = cholesky(a) {
        return Ok((chol_solve(&l, b), false));
    }
    let mut ridged = a.clone();
    for i in 0..ridged.nrows() {
        ridged[(i, i)] += ridge;
    }
    match cholesky(&ridged) {
        Some(l) => Ok((chol_solve(&l, b), true)),
        None => Err(Error::InvalidParameter(format!(
            "restricted system of size {} is singular even with ridge {ridge:.1e}",
            a.nrows()
        ))),
    }
}

/// Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi sweeps.
pub(crate) fn sym_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let mut m = a.clone();
    let scale: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.4], [0.6, 1.4, 3.0]];
        let x_true = array![1.0, -2.0, 0.5];
        let b = a.dot(&x_true);
        let (x, ridged) = solve_spd(&a, &b, 1e-10).unwrap();
        assert!(!ridged);
        for i in 0..3 {
            assert_abs_diff_eq!(x[i], x_true[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_system_uses_ridge() {
        // Rank-1 matrix: plain Cholesky must fail, ridge path must engage.
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let b = array![2.0, 2.0];
        let (x, ridged) = solve_spd(&a, &b, 1e-8).unwrap();
        assert!(ridged);
        // Ridge-regularized solve is approximate at the 1e-8 scale.
        assert_abs_diff_eq!(x[0], x[1], epsilon = 1e-6);
        assert_abs_diff_eq!(x[0] + x[1], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn jacobi_matches_closed_form_rank_one_update() {
        // c·I + d·11ᵀ in s dims has eigenvalues {c (s−1 times), c + d·s}.
        for &(c, d, s) in &[(1.0, 1.0, 4usize), (0.5, 0.5, 3), (0.1, 0.9, 5)] {
            let mut a = Array2::<f64>::from_elem((s, s), d);
            for i in 0..s {
                a[(i, i)] += c;
            }
            let eig = sym_eigenvalues(&a);
            for v in eig.iter().take(s - 1) {
                assert_abs_diff_eq!(*v, c, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(eig[s - 1], c + d * s as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobi_diagonal_matrix_is_exact() {
        let a = array![[3.0, 0.0], [0.0, -1.0]];
        let eig = sym_eigenvalues(&a);
        assert_eq!(eig, vec![-1.0, 3.0]);
    }
}
