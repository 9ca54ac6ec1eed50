//! Small dense linear algebra for metric matrices (n <= 6) and
//! deterministic floating-point reductions.

/// Largest chart dimension supported by the fixed-size jet storage and the
/// cyclic Jacobi eigensolver.
pub const MAX_DIM: usize = 6;

/// Packed upper-triangle length for an n x n symmetric matrix.
pub const fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Index into packed upper-triangle storage, row-major, for i <= j.
#[inline]
pub fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Symmetric index: accepts either order.
#[inline]
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    if i <= j {
        tri_index(n, i, j)
    } else {
        tri_index(n, j, i)
    }
}

/// Cholesky factorization of a symmetric matrix stored as a full row-major
/// n x n slice. Returns the lower factor L (row-major, upper part zeroed).
///
/// On failure at pivot k the matrix is not positive definite; the error
/// carries the value of the first non-positive leading principal minor
/// (order k+1).
pub fn cholesky(n: usize, a: &[f64]) -> Result<Vec<f64>, NotSpd> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    // det of the (i+1) leading block = pivot * prod of earlier pivots
                    let mut minor = sum;
                    for k in 0..i {
                        minor *= l[k * n + k] * l[k * n + k];
                    }
                    return Err(NotSpd {
                        order: i + 1,
                        minor,
                    });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Failure evidence for a positive-definiteness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotSpd {
    /// Order of the first non-positive leading principal minor.
    pub order: usize,
    /// Its value.
    pub minor: f64,
}

/// Inverse and sqrt-determinant of an SPD matrix via Cholesky.
pub fn spd_inverse_sqrt_det(n: usize, a: &[f64]) -> Result<(Vec<f64>, f64), NotSpd> {
    let l = cholesky(n, a)?;
    let mut sqrt_det = 1.0;
    for i in 0..n {
        sqrt_det *= l[i * n + i];
    }
    // Invert L in place (lower triangular), then inv(A) = L^-T L^-1.
    let mut linv = vec![0.0; n * n];
    for i in 0..n {
        linv[i * n + i] = 1.0 / l[i * n + i];
        for j in 0..i {
            let mut sum = 0.0;
            for k in j..i {
                sum += l[i * n + k] * linv[k * n + j];
            }
            linv[i * n + j] = -sum / l[i * n + i];
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in i..n {
                sum += linv[k * n + i] * linv[k * n + j];
            }
            inv[i * n + j] = sum;
            inv[j * n + i] = sum;
        }
    }
    Ok((inv, sqrt_det))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order. Adequate for n <= 6.
pub fn jacobi_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let scale = (0..n * n)
        .fold(0.0f64, |acc, i| acc.max(m[i].abs()))
        .max(1e-300);
    let tol = 1e-12 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i * n + j].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    eig
}

/// Smallest generalized eigenvalue of `Ric v = mu g v` with g SPD:
/// reduce to the ordinary symmetric problem L^-1 Ric L^-T.
pub fn min_generalized_eigenvalue(n: usize, ric: &[f64], g: &[f64]) -> Result<f64, NotSpd> {
    let l = cholesky(n, g)?;
    // X = L^-1 Ric  (forward substitution on columns)
    let mut x = vec![0.0; n * n];
    for col in 0..n {
        for i in 0..n {
            let mut sum = ric[i * n + col];
            for k in 0..i {
                sum -= l[i * n + k] * x[k * n + col];
            }
            x[i * n + col] = sum / l[i * n + i];
        }
    }
    // B = X L^-T, i.e. solve B L^T = X row by row (forward in the transposed sense)
    let mut b = vec![0.0; n * n];
    for row in 0..n {
        for j in 0..n {
            let mut sum = x[row * n + j];
            for k in 0..j {
                sum -= b[row * n + k] * l[j * n + k];
            }
            b[row * n + j] = sum / l[j * n + j];
        }
    }
    // Symmetrize against roundoff before Jacobi.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (b[i * n + j] + b[j * n + i]);
            b[i * n + j] = avg;
            b[j * n + i] = avg;
        }
    }
    Ok(jacobi_eigenvalues(n, &b)[0])
}

/// Fixed-order pairwise summation. The result depends only on the order of
/// the slice, never on thread count or chunking, so parallel maps that
/// collect in input order stay reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_identity() {
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let l = cholesky(2, &a).unwrap();
        assert_eq!(l, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0]; // minors: 1, -3
        let err = cholesky(2, &a).unwrap_err();
        assert_eq!(err.order, 2);
        assert!((err.minor - -3.0).abs() < 1e-12);
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let a = vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let (inv, sqrt_det) = spd_inverse_sqrt_det(3, &a).unwrap();
        // a * inv ~ I
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = 0.0;
                for k in 0..3 {
                    sum += a[i * 3 + k] * inv[k * 3 + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((sum - expect).abs() < 1e-12, "entry ({i},{j}) = {sum}");
            }
        }
        assert!(sqrt_det > 0.0);
    }

    #[test]
    fn jacobi_diagonal() {
        let a = vec![3.0, 0.0, 0.0, -1.0];
        assert_eq!(jacobi_eigenvalues(2, &a), vec![-1.0, 3.0]);
    }

    #[test]
    fn jacobi_trace_is_eigenvalue_sum() {
        let a = vec![2.0, 1.0, 0.3, 1.0, 2.5, -0.4, 0.3, -0.4, 1.8];
        let eig = jacobi_eigenvalues(3, &a);
        let sum: f64 = eig.iter().sum();
        assert!((sum - (2.0 + 2.5 + 1.8)).abs() < 1e-10);
    }

    #[test]
    fn generalized_eigen_constant_curvature() {
        // Ric = -2 g  =>  min eigenvalue -2 regardless of g.
        let g = vec![4.0, 0.3, 0.3, 5.0];
        let ric: Vec<f64> = g.iter().map(|x| -2.0 * x).collect();
        let mu = min_generalized_eigenvalue(2, &ric, &g).unwrap();
        assert!((mu - -2.0).abs() < 1e-10);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64) * 0.1).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }
}
