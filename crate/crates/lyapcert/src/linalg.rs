//! Small dense-vector helpers. Matrices are row-major `Vec<f64>` of length
//! `rows * cols`; the sizes involved here are tiny (state dimensions of the
//! stock examples are 1 and 2), so nothing clever is needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    math::sqrt(dot(v, v))
}

pub fn matvec(m: &[f64], v: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(v.len(), cols);
    (0..rows).map(|i| dot(&m[i * cols..(i + 1) * cols], v)).collect()
}

pub fn frobenius(m: &[f64]) -> f64 {
    math::sqrt(m.iter().map(|x| x * x).sum())
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eig_min(m: &[f64], n: usize) -> f64 {
    debug_assert_eq!(m.len(), n * n);
    if n == 1 {
        return m[0];
    }
    let mut a = m.to_vec();
    // Symmetrize defensively; quadrature round-off can leave a tiny skew part.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if math::abs(apq) < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut min = f64::INFINITY;
    for i in 0..n {
        if a[i * n + i] < min {
            min = a[i * n + i];
        }
    }
    min
}

/// Identity matrix, row-major.
pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_min_matches_2x2_closed_form() {
        // [[2,1],[1,3]] has eigenvalues (5 ± sqrt(5))/2.
        let m = [2.0, 1.0, 1.0, 3.0];
        let want = (5.0 - math::sqrt(5.0)) / 2.0;
        assert!(math::abs(sym_eig_min(&m, 2) - want) < 1e-12);
    }

    #[test]
    fn eig_min_diagonal() {
        let m = [4.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 9.0];
        assert!(math::abs(sym_eig_min(&m, 3) - 1.5) < 1e-14);
    }

    #[test]
    fn matvec_small() {
        let m = [1.0, 2.0, 3.0, 4.0];
        let v = [1.0, -1.0];
        assert_eq!(matvec(&m, &v, 2, 2), vec![-1.0, -1.0]);
    }
}
