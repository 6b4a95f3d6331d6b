//! Dense two-phase simplex for the small linear programs behind Legendre
//! conjugation of max-affine functions: `min cᵀλ` s.t. `Aλ = b`, `λ ≥ 0`,
//! where `A` has only `d + 1` rows.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
}

struct Tableau<T> {
    rows: usize,
    cols: usize, // structural + artificial, rhs stored separately
    a: Vec<T>,
    rhs: Vec<T>,
    obj: Vec<T>,
    obj_rhs: T,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, r: usize, c: usize) -> T {
        self.a[r * self.cols + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let p = self.at(r, c);
        for k in 0..cols {
            self.a[r * cols + k] = self.a[r * cols + k] / p;
        }
        self.rhs[r] = self.rhs[r] / p;
        for rr in 0..self.rows {
            if rr == r {
                continue;
            }
            let f = self.at(rr, c);
            if f == T::zero() {
                continue;
            }
            for k in 0..cols {
                self.a[rr * cols + k] = self.a[rr * cols + k] - f * self.a[r * cols + k];
            }
            self.rhs[rr] = self.rhs[rr] - f * self.rhs[r];
        }
        let f = self.obj[c];
        if f != T::zero() {
            for k in 0..cols {
                self.obj[k] = self.obj[k] - f * self.a[r * cols + k];
            }
            self.obj_rhs = self.obj_rhs - f * self.rhs[r];
        }
        self.basis[r] = c;
    }

    /// Bland's rule iterations over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, tol: T, max_iter: usize) -> Result<()> {
        for _ in 0..max_iter {
            let Some(enter) = (0..allowed).find(|&c| self.obj[c] < -tol) else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > tol {
                    let ratio = self.rhs[r] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lv)) => {
                            if ratio < lv || (ratio == lv && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lv))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Err(Error::Numerical("linear program is unbounded".into())),
            }
        }
        Err(Error::Numerical("simplex iteration cap reached".into()))
    }
}

/// `a` is row-major `m × n`.
pub(crate) fn solve_lp<T: Scalar>(a: &[T], b: &[T], c: &[T], tol: T) -> Result<LpOutcome<T>> {
    let m = b.len();
    let n = c.len();
    debug_assert_eq!(a.len(), m * n);
    let cols = n + m;
    let mut tab = Tableau {
        rows: m,
        cols,
        a: vec![T::zero(); m * cols],
        rhs: vec![T::zero(); m],
        obj: vec![T::zero(); cols],
        obj_rhs: T::zero(),
        basis: (n..n + m).collect(),
    };
    for r in 0..m {
        let sign = if b[r] < T::zero() { -T::one() } else { T::one() };
        for k in 0..n {
            tab.a[r * cols + k] = sign * a[r * n + k];
        }
        tab.a[r * cols + n + r] = T::one();
        tab.rhs[r] = sign * b[r];
    }
    // phase 1: minimize the sum of artificials
    for r in 0..m {
        for k in 0..n {
            tab.obj[k] = tab.obj[k] - tab.a[r * cols + k];
        }
        tab.obj_rhs = tab.obj_rhs - tab.rhs[r];
    }
    let max_iter = 50 * (n + m) + 100;
    tab.optimize(cols, tol, max_iter)?;
    let scale = T::one() + b.iter().fold(T::zero(), |acc, v| acc + v.abs());
    if -tab.obj_rhs > T::lit(1e3) * tol * scale {
        return Ok(LpOutcome::Infeasible);
    }
    // drive remaining artificials out of the basis
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(c) = (0..n).find(|&c| tab.at(r, c).abs() > tol) {
                tab.pivot(r, c);
            }
        }
    }
    // phase 2
    tab.obj.iter_mut().for_each(|v| *v = T::zero());
    tab.obj[..n].copy_from_slice(c);
    tab.obj_rhs = T::zero();
    for r in 0..m {
        let bcol = tab.basis[r];
        if bcol < n {
            let f = tab.obj[bcol];
            if f != T::zero() {
                for k in 0..cols {
                    tab.obj[k] = tab.obj[k] - f * tab.a[r * cols + k];
                }
                tab.obj_rhs = tab.obj_rhs - f * tab.rhs[r];
            }
        }
    }
    tab.optimize(n, tol, max_iter)?;
    let mut x = vec![T::zero(); n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs[r];
        }
    }
    let value = x.iter().zip(c).fold(T::zero(), |acc, (&xi, &ci)| acc + xi * ci);
    Ok(LpOutcome::Optimal { value, x })
}
