//! Adaptive tensor Gauss–Legendre cubature over axis-aligned boxes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

// Nodes/weights on [-1, 1].
const GL6_X: [f64; 6] = [
    -0.932_469_514_203_152_0,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152_0,
];
const GL6_W: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_0,
    0.467_913_934_572_691_0,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];
const GL3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_W: [f64; 3] = [0.555_555_555_555_555_6, 0.888_888_888_888_888_9, 0.555_555_555_555_555_6];

#[derive(Debug, Clone, Copy)]
pub struct CubatureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of cells that may be evaluated.
    pub max_cells: usize,
}

impl Default for CubatureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-9, max_cells: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

struct Cell<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Cell<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Scalar> Eq for Cell<T> {}
impl<T: Scalar> PartialOrd for Cell<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Cell<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn tensor_rule<T: Scalar, F: Fn(&[T]) -> T>(
    f: &F,
    lower: &[T],
    upper: &[T],
    xs: &[f64],
    ws: &[f64],
    buf: &mut [T],
) -> T {
    let m = lower.len();
    let k = xs.len();
    let half: Vec<T> = lower.iter().zip(upper).map(|(&a, &b)| (b - a) * T::lit(0.5)).collect();
    let mid: Vec<T> = lower.iter().zip(upper).map(|(&a, &b)| (b + a) * T::lit(0.5)).collect();
    let jac = half.iter().fold(T::one(), |acc, &h| acc * h);
    let mut idx = vec![0usize; m];
    let mut total = T::zero();
    loop {
        let mut w = T::one();
        for a in 0..m {
            buf[a] = mid[a] + half[a] * T::lit(xs[idx[a]]);
            w = w * T::lit(ws[idx[a]]);
        }
        total = total + w * f(&buf[..m]);
        // odometer increment
        let mut a = 0;
        while a < m {
            idx[a] += 1;
            if idx[a] < k {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
        if a == m {
            break;
        }
    }
    total * jac
}

fn evaluate<T: Scalar, F: Fn(&[T]) -> T>(f: &F, lower: Vec<T>, upper: Vec<T>, buf: &mut [T]) -> Cell<T> {
    let hi = tensor_rule(f, &lower, &upper, &GL6_X, &GL6_W, buf);
    let lo = tensor_rule(f, &lower, &upper, &GL3_X, &GL3_W, buf);
    Cell { lower, upper, value: hi, error: (hi - lo).abs() }
}

/// Integrates `f` over the box `[lower, upper]` by greedy bisection of the
/// cell with the largest error indicator (difference between a 6-point and a
/// 3-point tensor Gauss–Legendre rule).
///
/// A zero-dimensional box is a point and integrates to `f(&[])`.
pub fn integrate_box<T, F>(f: F, lower: &[T], upper: &[T], opts: CubatureOptions) -> Result<Estimate<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    assert_eq!(lower.len(), upper.len());
    let m = lower.len();
    if m == 0 {
        return Ok(Estimate { value: f(&[]), error: T::zero() });
    }
    let mut buf = vec![T::zero(); m];
    let root = evaluate(&f, lower.to_vec(), upper.to_vec(), &mut buf);
    let mut value = root.value;
    let mut error = root.error;
    let mut heap = BinaryHeap::new();
    heap.push(root);
    let mut cells = 1usize;
    let abs_tol = T::lit(opts.abs_tol);
    let rel_tol = T::lit(opts.rel_tol);
    loop {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if cells + 2 > opts.max_cells {
            return Err(Error::Convergence(format!(
                "cubature error estimate {:e} above tolerance after {} cells",
                error.to_f64_lossy(),
                cells
            )));
        }
        let worst = heap.pop().expect("heap holds at least one cell");
        let axis = (0..m)
            .max_by(|&a, &b| {
                let la = worst.upper[a] - worst.lower[a];
                let lb = worst.upper[b] - worst.lower[b];
                la.partial_cmp(&lb).unwrap_or(Ordering::Equal)
            })
            .expect("m > 0");
        let split = (worst.lower[axis] + worst.upper[axis]) * T::lit(0.5);
        let mut left_upper = worst.upper.clone();
        left_upper[axis] = split;
        let mut right_lower = worst.lower.clone();
        right_lower[axis] = split;
        let left = evaluate(&f, worst.lower.clone(), left_upper, &mut buf);
        let right = evaluate(&f, right_lower, worst.upper.clone(), &mut buf);
        value = value - worst.value + left.value + right.value;
        error = error - worst.error + left.error + right.error;
        // guard against drift from incremental updates
        if error < T::zero() {
            error = heap.iter().fold(left.error + right.error, |acc, c| acc + c.error);
        }
        heap.push(left);
        heap.push(right);
        cells += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        // ∫_{[0,1]×[0,2]} x²y dx dy = (1/3)(2) = 2/3
        let est = integrate_box(|p: &[f64]| p[0] * p[0] * p[1], &[0.0, 0.0], &[1.0, 2.0], Default::default()).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn point_box() {
        let est = integrate_box(|_: &[f64]| 3.5, &[], &[], Default::default()).unwrap();
        assert_eq!(est.value, 3.5);
    }

    #[test]
    fn peaked_integrand_refines() {
        // ∫_{-1}^{1} h/(h²+s²) ds = 2 atan(1/h)
        let h = 1e-3;
        let est = integrate_box(move |p: &[f64]| h / (h * h + p[0] * p[0]), &[-1.0], &[1.0], Default::default()).unwrap();
        assert!((est.value - 2.0 * (1.0f64 / h).atan()).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = CubatureOptions { abs_tol: 0.0, rel_tol: 0.0, max_cells: 5 };
        let r = integrate_box(|p: &[f64]| p[0].abs().sqrt(), &[-1.0], &[1.0], opts);
        assert!(matches!(r, Err(Error::Convergence(_))));
    }
}
