//! Exact active-set solver for the simplex-constrained quadratic program
//!
//! ```text
//!     maximize   Σ λ_j c_j − (ε/2) |Σ λ_j u_j|²   over λ in the probability simplex,
//! ```
//!
//! which is the dual of the proximal step of a max-affine function with
//! slopes `u_j` and values `c_j = ⟨x, u_j⟩ − v_j` at the query point.
//!
//! The free set is kept affinely independent, so every equality-constrained
//! subproblem has a nonsingular KKT matrix. When the entering slope lies in the
//! affine hull of the free set, the objective is linear along the null
//! direction and the step runs until a free weight reaches zero.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::scalar::{dot, Scalar};

pub(crate) struct QpSolution<T> {
    /// `(index, weight)` for the pieces with positive weight.
    pub support: Vec<(usize, T)>,
    /// Optimal dual value `Σ λ c − (ε/2)|ū|²`.
    pub value: T,
    /// `ū = Σ λ_j u_j`.
    pub gradient: Vec<T>,
}

pub(crate) fn solve_simplex_qp<T: Scalar>(slopes: &[&[T]], c: &[T], eps: T) -> Result<QpSolution<T>> {
    let k = c.len();
    assert!(k > 0 && slopes.len() == k);
    let d = slopes[0].len();
    let gram = |a: usize, b: usize| eps * dot(slopes[a], slopes[b]);

    let cscale = c.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let price_tol = T::lit(1e4) * T::epsilon() * (T::one() + cscale);
    let pivot_tol = T::lit(1e3) * T::epsilon();
    let dep_tol = T::tol(1e-10);

    let start = (0..k).fold(0, |best, j| if c[j] > c[best] { j } else { best });
    let mut free = vec![start];
    let mut lam = vec![T::zero(); k];
    lam[start] = T::one();

    let max_iter = 10 * k + 10;
    let mut iter = 0;
    loop {
        iter += 1;
        if iter > max_iter {
            return Err(Error::Numerical(format!("active-set QP did not converge in {} iterations", max_iter)));
        }

        // (A) equality-constrained optimum on the free set, with ratio steps
        // whenever it leaves the simplex.
        loop {
            if free.len() == 1 {
                lam[free[0]] = T::one();
                break;
            }
            let f = free.len();
            let mut m = vec![T::zero(); (f + 1) * (f + 1)];
            let mut rhs = vec![T::zero(); f + 1];
            for (a, &ia) in free.iter().enumerate() {
                for (b, &ib) in free.iter().enumerate() {
                    m[a * (f + 1) + b] = gram(ia, ib);
                }
                m[a * (f + 1) + f] = T::one();
                m[f * (f + 1) + a] = T::one();
                rhs[a] = c[ia];
            }
            rhs[f] = T::one();
            let sol = solve_dense(m, rhs, pivot_tol)
                .ok_or_else(|| Error::Numerical("singular KKT system in active-set QP".into()))?;
            if sol[..f].iter().all(|&w| w >= T::zero()) {
                for (a, &ia) in free.iter().enumerate() {
                    lam[ia] = sol[a];
                }
                break;
            }
            let mut alpha = T::one();
            let mut block = 0;
            for (a, &ia) in free.iter().enumerate() {
                if sol[a] < lam[ia] {
                    let t = lam[ia] / (lam[ia] - sol[a]);
                    if t < alpha {
                        alpha = t;
                        block = a;
                    }
                }
            }
            for (a, &ia) in free.iter().enumerate() {
                lam[ia] = lam[ia] + alpha * (sol[a] - lam[ia]);
            }
            lam[free[block]] = T::zero();
            free.remove(block);
        }

        // (B) pricing
        let ubar = combine(slopes, &free, &lam, d);
        let hl = |j: usize| eps * dot(slopes[j], &ubar);
        let mu = free.iter().fold(T::zero(), |acc, &l| acc + c[l] - hl(l)) / T::from_usize_lossy(free.len());
        let mut enter = None;
        let mut worst = price_tol;
        for j in 0..k {
            if lam[j] > T::zero() || free.contains(&j) {
                continue;
            }
            let viol = c[j] - hl(j) - mu;
            if viol > worst {
                worst = viol;
                enter = Some(j);
            }
        }
        let Some(j) = enter else {
            let support: Vec<(usize, T)> = free.iter().map(|&l| (l, lam[l])).collect();
            let value = support.iter().fold(T::zero(), |acc, &(l, w)| acc + w * c[l]) - eps * T::lit(0.5) * dot(&ubar, &ubar);
            return Ok(QpSolution { support, value, gradient: ubar });
        };

        // (C) enlarge the free set, or pivot along the affine dependency
        match affine_coordinates(slopes, &free, j, dep_tol) {
            None => free.push(j),
            Some(coef) => {
                let mut alpha = T::infinity();
                let mut block = 0;
                for (a, &ia) in free.iter().enumerate() {
                    if coef[a] > T::zero() {
                        let t = lam[ia] / coef[a];
                        if t < alpha {
                            alpha = t;
                            block = a;
                        }
                    }
                }
                for (a, &ia) in free.iter().enumerate() {
                    lam[ia] = (lam[ia] - alpha * coef[a]).max(T::zero());
                }
                lam[free[block]] = T::zero();
                lam[j] = alpha;
                free[block] = j;
            }
        }
    }
}

fn combine<T: Scalar>(slopes: &[&[T]], free: &[usize], lam: &[T], d: usize) -> Vec<T> {
    if free.len() == 1 {
        return slopes[free[0]].to_vec();
    }
    let mut u = vec![T::zero(); d];
    for &l in free {
        for (o, &s) in u.iter_mut().zip(slopes[l]) {
            *o = *o + lam[l] * s;
        }
    }
    u
}

/// If `u_j` lies in the affine hull of the free slopes, returns its affine
/// coordinates `a` (`Σ a = 1`, `Σ a_l u_l = u_j`).
fn affine_coordinates<T: Scalar>(slopes: &[&[T]], free: &[usize], j: usize, tol: T) -> Option<Vec<T>> {
    let f = free.len();
    let d = slopes[j].len();
    // normal equations of [U_F; 1ᵀ] a ≈ [u_j; 1]
    let mut m = vec![T::zero(); f * f];
    let mut rhs = vec![T::zero(); f];
    for (a, &ia) in free.iter().enumerate() {
        for (b, &ib) in free.iter().enumerate() {
            m[a * f + b] = dot(slopes[ia], slopes[ib]) + T::one();
        }
        rhs[a] = dot(slopes[ia], slopes[j]) + T::one();
    }
    let coef = solve_dense(m, rhs, T::lit(1e3) * T::epsilon())?;
    let mut resid = coef.iter().fold(-T::one(), |acc, &v| acc + v).powi(2);
    for k in 0..d {
        let s = free.iter().zip(&coef).fold(T::zero(), |acc, (&l, &a)| acc + a * slopes[l][k]);
        resid = resid + (s - slopes[j][k]).powi(2);
    }
    if f > d || resid.sqrt() <= tol {
        Some(coef)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(slopes: &[&[f64]], c: &[f64], eps: f64) -> f64 {
        // projected gradient ascent to high accuracy, independent of the active-set path
        let k = c.len();
        let mut lam = vec![1.0 / k as f64; k];
        for _ in 0..200_000 {
            let d = slopes[0].len();
            let mut ub = vec![0.0; d];
            for j in 0..k {
                for a in 0..d {
                    ub[a] += lam[j] * slopes[j][a];
                }
            }
            let grad: Vec<f64> = (0..k).map(|j| c[j] - eps * dot(slopes[j], &ub)).collect();
            let y: Vec<f64> = (0..k).map(|j| lam[j] + 0.05 * grad[j]).collect();
            lam = project_simplex(&y);
        }
        let d = slopes[0].len();
        let mut ub = vec![0.0; d];
        for j in 0..k {
            for a in 0..d {
                ub[a] += lam[j] * slopes[j][a];
            }
        }
        (0..k).map(|j| lam[j] * c[j]).sum::<f64>() - 0.5 * eps * dot(&ub, &ub)
    }

    fn project_simplex(y: &[f64]) -> Vec<f64> {
        let mut s = y.to_vec();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut acc = 0.0;
        let mut theta = 0.0;
        for (i, v) in s.iter().enumerate() {
            acc += v;
            let t = (acc - 1.0) / (i + 1) as f64;
            if v - t > 0.0 {
                theta = t;
            }
        }
        y.iter().map(|v| (v - theta).max(0.0)).collect()
    }

    #[test]
    fn single_piece() {
        let u = [0.3, -0.2];
        let s = solve_simplex_qp(&[&u[..]], &[1.5], 0.1).unwrap();
        assert_eq!(s.gradient, vec![0.3, -0.2]);
    }

    #[test]
    fn matches_projected_gradient() {
        let raw = [[0.5, 0.0], [-0.5, 0.0], [0.0, 0.4], [0.1, 0.1], [0.3, -0.3]];
        let slopes: Vec<&[f64]> = raw.iter().map(|r| &r[..]).collect();
        for (c, eps) in [
            (vec![0.0, 0.0, 0.0, 0.0, 0.0], 1.0),
            (vec![0.1, 0.05, 0.08, 0.09, 0.0], 0.7),
            (vec![1.0, -1.0, 0.2, 0.0, 0.3], 2.0),
        ] {
            let s = solve_simplex_qp(&slopes, &c, eps).unwrap();
            let bf = brute_force(&slopes, &c, eps);
            assert!((s.value - bf).abs() < 1e-9, "active set {} vs {}", s.value, bf);
        }
    }

    #[test]
    fn collinear_slopes_are_handled() {
        // affinely dependent slopes on a line
        let raw = [[0.2, 0.0], [0.4, 0.0], [0.6, 0.0], [0.8, 0.0]];
        let slopes: Vec<&[f64]> = raw.iter().map(|r| &r[..]).collect();
        let c = [0.0, 0.05, 0.06, 0.04];
        let s = solve_simplex_qp(&slopes, &c, 1.0).unwrap();
        let bf = brute_force(&slopes, &c, 1.0);
        assert!((s.value - bf).abs() < 1e-9);
    }
}
