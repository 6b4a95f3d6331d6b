//! Tiny dense solves for the active-set iterations (systems of size ≤ d+2).

use crate::scalar::Scalar;

/// Solves `M x = b` for square row-major `m` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `tol · max|M|`.
pub(crate) fn solve_dense<T: Scalar>(mut m: Vec<T>, mut b: Vec<T>, tol: T) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(m.len(), n * n);
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, T::neg_infinity()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / p;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                m[r * n + k] = m[r * n + k] - f * m[col * n + k];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in (r + 1)..n {
            s = s - m[r * n + k] * x[k];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_detects_singular() {
        let x = solve_dense::<f64>(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0], 1e-12).is_none());
    }
}
