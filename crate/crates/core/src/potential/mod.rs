//! Convex analysis on max-affine potentials `φ̂(x) = max_i (⟨x, u_i⟩ − v_i)`:
//! evaluation, subdifferentials, Legendre conjugation, Moreau smoothing, and
//! the empirical center-outward map built on top of them.

mod lp;
mod map;
mod qp;

pub use map::{build_empirical_potential, EmpiricalMap, MapFile, RankSign};

use crate::error::{param, Error, Result};
use crate::points::PointSet;
use crate::scalar::{dot, norm, Scalar};
use lp::{solve_lp, LpOutcome};
use qp::solve_simplex_qp;

/// Absolute tolerance for deciding that a piece attains the maximum.
pub const ACTIVE_TOL: f64 = 1e-12;

/// Finite maximum of affine functions with slopes in the closed unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxAffinePotential<T> {
    slopes: PointSet<T>,
    intercepts: Vec<T>,
}

/// Result of a Moreau/proximal evaluation at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MoreauPoint<T> {
    /// `∇e_ε φ̂(x) = (x − prox_{εφ̂}(x)) / ε`.
    pub gradient: Vec<T>,
    /// `e_ε φ̂(x) = min_z φ̂(z) + |z − x|² / (2ε)`.
    pub envelope: T,
    /// Pieces carrying positive weight in the dual solution, with weights.
    pub support: Vec<(usize, T)>,
}

impl<T: Scalar> MaxAffinePotential<T> {
    pub fn new(slopes: PointSet<T>, intercepts: Vec<T>) -> Result<Self> {
        if slopes.is_empty() || slopes.len() != intercepts.len() {
            return Err(param!("need one intercept per slope and at least one piece"));
        }
        let limit = T::one() + T::tol(1e-12);
        if let Some(i) = slopes.rows().position(|u| norm(u) > limit) {
            return Err(param!("slope {} lies outside the closed unit ball", i));
        }
        Ok(Self { slopes, intercepts })
    }

    pub fn dim(&self) -> usize {
        self.slopes.dim()
    }
    pub fn len(&self) -> usize {
        self.intercepts.len()
    }
    pub fn is_empty(&self) -> bool {
        self.intercepts.is_empty()
    }
    pub fn slopes(&self) -> &PointSet<T> {
        &self.slopes
    }
    pub fn intercepts(&self) -> &[T] {
        &self.intercepts
    }

    /// Value of piece `j` at `x`.
    #[inline]
    pub fn piece(&self, j: usize, x: &[T]) -> T {
        dot(x, self.slopes.row(j)) - self.intercepts[j]
    }

    /// `(value, first maximizing piece)`.
    pub fn eval_argmax(&self, x: &[T]) -> (T, usize) {
        let mut best = T::neg_infinity();
        let mut arg = 0;
        for j in 0..self.len() {
            let v = self.piece(j, x);
            if v > best {
                best = v;
                arg = j;
            }
        }
        (best, arg)
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.eval_argmax(x).0
    }

    /// Indices of the pieces within `ACTIVE_TOL` of the maximum at `x`.
    pub fn active_pieces(&self, x: &[T]) -> Vec<usize> {
        let top = self.eval(x);
        let tol = T::tol(ACTIVE_TOL);
        (0..self.len()).filter(|&j| self.piece(j, x) >= top - tol).collect()
    }

    /// `∂φ̂(x)` as the list of active slopes; the subdifferential is their convex hull.
    pub fn subdifferential_at(&self, x: &[T]) -> Vec<Vec<T>> {
        self.active_pieces(x).into_iter().map(|j| self.slopes.row(j).to_vec()).collect()
    }

    /// `φ̂*(u) = min { Σ λ_i v_i : Σ λ_i u_i = u, λ in the simplex }`; `+∞`
    /// when `u` is outside the convex hull of the slopes.
    pub fn conjugate_eval(&self, u: &[T]) -> Result<T> {
        Ok(self.conjugate_solve(u)?.map_or(T::infinity(), |(v, _)| v))
    }

    /// Optimal simplex weights of the conjugate program, `None` when infeasible.
    pub fn conjugate_weights(&self, u: &[T]) -> Result<Option<Vec<T>>> {
        Ok(self.conjugate_solve(u)?.map(|(_, w)| w))
    }

    fn conjugate_solve(&self, u: &[T]) -> Result<Option<(T, Vec<T>)>> {
        if u.len() != self.dim() {
            return Err(param!("conjugate argument has dimension {}, expected {}", u.len(), self.dim()));
        }
        let n = self.len();
        let d = self.dim();
        let mut a = vec![T::zero(); (d + 1) * n];
        for j in 0..n {
            let s = self.slopes.row(j);
            for k in 0..d {
                a[k * n + j] = s[k];
            }
            a[d * n + j] = T::one();
        }
        let mut b = u.to_vec();
        b.push(T::one());
        Ok(match solve_lp(&a, &b, &self.intercepts, T::tol(1e-11))? {
            LpOutcome::Optimal { value, x } => Some((value, x)),
            LpOutcome::Infeasible => None,
        })
    }

    /// `φ̂**(x) = sup_u ⟨x, u⟩ − φ̂*(u)`, as the linear program dual to the
    /// conjugate: maximize `Σ λ_i (⟨x, u_i⟩ − v_i)` over the simplex.
    pub fn biconjugate_eval(&self, x: &[T]) -> Result<T> {
        let n = self.len();
        let a = vec![T::one(); n];
        let c: Vec<T> = (0..n).map(|j| -self.piece(j, x)).collect();
        match solve_lp(&a, &[T::one()], &c, T::tol(1e-11))? {
            LpOutcome::Optimal { value, .. } => Ok(-value),
            LpOutcome::Infeasible => Err(Error::Numerical("simplex program reported infeasible".into())),
        }
    }

    /// Gradient and value of the Moreau envelope `e_ε φ̂` at `x`.
    ///
    /// Only pieces within `2ε` of the maximum can carry weight in the dual
    /// problem (slopes have norm ≤ 1), so the QP runs on those.
    pub fn moreau(&self, x: &[T], eps: T) -> Result<MoreauPoint<T>> {
        if !(eps > T::zero()) {
            return Err(param!("smoothing parameter must be positive"));
        }
        let values: Vec<T> = (0..self.len()).map(|j| self.piece(j, x)).collect();
        let top = values.iter().copied().fold(T::neg_infinity(), T::max);
        let cut = top - T::lit(2.0) * eps * (T::one() + T::lit(1e-9)) - T::tol(ACTIVE_TOL);
        let cand: Vec<usize> = (0..self.len()).filter(|&j| values[j] >= cut).collect();
        let slopes: Vec<&[T]> = cand.iter().map(|&j| self.slopes.row(j)).collect();
        let c: Vec<T> = cand.iter().map(|&j| values[j]).collect();
        let sol = solve_simplex_qp(&slopes, &c, eps)?;
        Ok(MoreauPoint {
            gradient: sol.gradient,
            envelope: sol.value,
            support: sol.support.into_iter().map(|(l, w)| (cand[l], w)).collect(),
        })
    }
}
