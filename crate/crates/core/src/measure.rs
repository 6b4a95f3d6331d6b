//! The spherical uniform law `U_d` on the open unit ball: density, sampling,
//! exact ball masses, box masses by quadrature or Monte Carlo, and the
//! doubling-ratio probe on the thin boxes `S_r = [-1/12, 7/12] × [-r, r]^{d-1}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubature::{integrate_box, CubatureOptions, Estimate};
use crate::error::{domain, param, Error, Result};
use crate::points::PointSet;
use crate::rng::{derive_seed, stream, unit_direction};
use crate::scalar::{norm, Scalar};

/// Samples drawn per independently seeded Monte-Carlo chunk.
const MC_CHUNK: usize = 1 << 16;
/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

pub const DEFAULT_MC_BUDGET: usize = 1_000_000;
pub const DEFAULT_QUADRATURE_CELLS: usize = 400_000;

/// `a_d = 2 π^{d/2} / Γ(d/2)`, the surface area of the unit sphere in ℝᵈ.
///
/// Γ(d/2) is evaluated exactly from Γ(1) = 1, Γ(1/2) = √π and Γ(x+1) = xΓ(x).
pub fn surface_constant(d: usize) -> f64 {
    assert!(d >= 1);
    let pi = std::f64::consts::PI;
    let mut gamma = if d % 2 == 0 { 1.0 } else { pi.sqrt() };
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * pi.powf(d as f64 / 2.0) / gamma
}

/// Axis-aligned closed box `[lower, upper]` with `lower[k] < upper[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> ConvexBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(domain!("box bounds must be non-empty and of equal length"));
        }
        for (k, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(domain!("box side {} is degenerate: [{}, {}]", k, a, b));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(center: &[T], half_width: T) -> Result<Self> {
        Self::new(
            center.iter().map(|&c| c - half_width).collect(),
            center.iter().map(|&c| c + half_width).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
    pub fn lower(&self) -> &[T] {
        &self.lower
    }
    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn volume(&self) -> T {
        self.lower.iter().zip(&self.upper).fold(T::one(), |acc, (&a, &b)| acc * (b - a))
    }

    pub fn center(&self) -> Vec<T> {
        self.lower.iter().zip(&self.upper).map(|(&a, &b)| (a + b) * T::lit(0.5)).collect()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&a, &b))| a <= v && v <= b)
    }

    pub fn contains_origin(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(&a, &b)| a <= T::zero() && T::zero() <= b)
    }

    /// Norm of the corner farthest from the origin.
    pub fn farthest_norm(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(T::zero(), |acc, (&a, &b)| {
                let m = a.abs().max(b.abs());
                acc + m * m
            })
            .sqrt()
    }

    /// Distance from the origin to the box.
    pub fn nearest_norm(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(T::zero(), |acc, (&a, &b)| {
                let m = if a > T::zero() {
                    a
                } else if b < T::zero() {
                    -b
                } else {
                    T::zero()
                };
                acc + m * m
            })
            .sqrt()
    }

    /// Image under `x ↦ c + factor·(x − c)` with `c` the center of mass.
    pub fn dilate(&self, factor: T) -> Result<Self> {
        let c = self.center();
        let map = |v: T, ck: T| ck + (v - ck) * factor;
        Self::new(
            self.lower.iter().zip(&c).map(|(&v, &ck)| map(v, ck)).collect(),
            self.upper.iter().zip(&c).map(|(&v, &ck)| map(v, ck)).collect(),
        )
    }

    /// Splits along `axis` at `at` (strictly inside the side).
    pub fn split(&self, axis: usize, at: T) -> Result<(Self, Self)> {
        let mut lu = self.upper.clone();
        lu[axis] = at;
        let mut rl = self.lower.clone();
        rl[axis] = at;
        Ok((Self::new(self.lower.clone(), lu)?, Self::new(rl, self.upper.clone())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    Quadrature,
    MonteCarlo,
}

/// Ratio `U_d(S) / U_d(½S)` with the two masses it was formed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingEstimate<T> {
    pub ratio: T,
    pub error: T,
    pub full: Estimate<T>,
    pub half: Estimate<T>,
}

/// The spherical uniform distribution on the unit ball of ℝᵈ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalUniform<T> {
    dim: usize,
    surface: T,
}

impl<T: Scalar> SphericalUniform<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(domain!("dimension must be at least 1"));
        }
        Ok(Self { dim, surface: T::lit(surface_constant(dim)) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `a_d`.
    pub fn surface_constant(&self) -> T {
        self.surface
    }

    /// `1 / (a_d |u|^{d-1})` on the punctured open ball.
    pub fn density(&self, u: &[T]) -> Result<T> {
        self.check_dim(u.len())?;
        let r = norm(u);
        if !(r > T::zero()) || r >= T::one() {
            return Err(domain!("density is defined only for 0 < |u| < 1, got |u| = {}", r));
        }
        Ok(self.density_unchecked(r))
    }

    #[inline]
    pub(crate) fn density_unchecked(&self, r: T) -> T {
        T::one() / (self.surface * r.powi(self.dim as i32 - 1))
    }

    /// `n` i.i.d. draws `R·S` with `R ~ Uniform(0,1)` and `S` uniform on the sphere.
    pub fn sample(&self, n: usize, seed: u64) -> PointSet<T> {
        let mut rng = stream(seed);
        let mut dir = vec![0.0f64; self.dim];
        let mut out = PointSet::with_capacity(self.dim, n);
        let mut row = vec![T::zero(); self.dim];
        for _ in 0..n {
            let r: f64 = rng.random::<f64>();
            unit_direction(&mut rng, &mut dir);
            for (o, &s) in row.iter_mut().zip(&dir) {
                *o = T::lit(r * s);
            }
            out.push(&row);
        }
        out
    }

    /// `U_d(r 𝔹_d) = r`.
    pub fn ball_mass(&self, r: T) -> Result<T> {
        if !(r >= T::zero() && r <= T::one()) {
            return Err(domain!("ball radius must lie in [0, 1], got {}", r));
        }
        Ok(r)
    }

    /// Mass of `bx ⊆ 𝔹_d` with an error bound.
    ///
    /// For `Quadrature`, `budget` caps the number of cubature cells; for
    /// `MonteCarlo` it is the sample count and the error is a 99% CI half-width.
    pub fn box_mass(&self, bx: &ConvexBox<T>, method: MassMethod, budget: usize, seed: u64) -> Result<Estimate<T>> {
        self.check_dim(bx.dim())?;
        if bx.farthest_norm() >= T::one() {
            return Err(domain!("box is not contained in the open unit ball"));
        }
        match method {
            MassMethod::Quadrature => self.box_mass_quadrature(bx, budget),
            MassMethod::MonteCarlo => {
                if budget == 0 {
                    return Err(param!("Monte-Carlo budget must be positive"));
                }
                Ok(self.box_mass_monte_carlo(bx, budget, seed))
            }
        }
    }

    fn box_mass_quadrature(&self, bx: &ConvexBox<T>, budget: usize) -> Result<Estimate<T>> {
        let d = self.dim;
        let opts = CubatureOptions { abs_tol: 1e-14, rel_tol: 1e-9, max_cells: budget };
        if !bx.contains_origin() {
            let dens = |x: &[T]| self.density_unchecked(norm(x));
            return integrate_box(dens, bx.lower(), bx.upper(), opts);
        }
        // Cone decomposition from the origin: the box is the union of pyramids
        // over its faces, and along each ray the mass density is constant, so
        // a pyramid over the face at distance h carries (h / a_d) ∫_face |y|^{1-d}.
        let mut total = Estimate { value: T::zero(), error: T::zero() };
        for k in 0..d {
            for h in [bx.upper()[k], -bx.lower()[k]] {
                if h <= T::zero() {
                    continue;
                }
                let lo: Vec<T> = (0..d).filter(|&a| a != k).map(|a| bx.lower()[a]).collect();
                let hi: Vec<T> = (0..d).filter(|&a| a != k).map(|a| bx.upper()[a]).collect();
                let surface = self.surface;
                let face = move |y: &[T]| {
                    let r2 = y.iter().fold(h * h, |acc, &v| acc + v * v);
                    h / (surface * r2.sqrt().powi(d as i32 - 1))
                };
                let e = integrate_box(face, &lo, &hi, opts)?;
                total.value = total.value + e.value;
                total.error = total.error + e.error;
            }
        }
        Ok(total)
    }

    fn box_mass_monte_carlo(&self, bx: &ConvexBox<T>, budget: usize, seed: u64) -> Estimate<T> {
        let chunks = budget.div_ceil(MC_CHUNK);
        let d = self.dim;
        let lower: Vec<f64> = bx.lower().iter().map(|v| v.to_f64_lossy()).collect();
        let upper: Vec<f64> = bx.upper().iter().map(|v| v.to_f64_lossy()).collect();
        let hits: u64 = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let take = MC_CHUNK.min(budget - c * MC_CHUNK);
                let mut rng = stream(derive_seed(seed, &[c as u64]));
                let mut dir = vec![0.0f64; d];
                let mut count = 0u64;
                for _ in 0..take {
                    let r: f64 = rng.random::<f64>();
                    unit_direction(&mut rng, &mut dir);
                    let inside = dir
                        .iter()
                        .zip(lower.iter().zip(&upper))
                        .all(|(&s, (&a, &b))| a <= r * s && r * s <= b);
                    count += inside as u64;
                }
                count
            })
            .sum();
        let n = budget as f64;
        let p = hits as f64 / n;
        let var = (p * (1.0 - p)).max(1.0 / n);
        Estimate { value: T::lit(p), error: T::lit(Z99 * (var / n).sqrt()) }
    }

    /// The thin box `S_r = [-1/12, 7/12] × [-r, r]^{d-1}`.
    pub fn doubling_box(&self, r: T) -> Result<ConvexBox<T>> {
        let mut lower = vec![-r; self.dim];
        let mut upper = vec![r; self.dim];
        lower[0] = T::lit(-1.0 / 12.0);
        upper[0] = T::lit(7.0 / 12.0);
        ConvexBox::new(lower, upper)
    }

    /// `U_d(S_r) / U_d(½S_r)`, the dilation taken about the center of mass
    /// `(1/4, 0, …, 0)`. Requires `0 < r ≤ 1/4` and `S_r ⊆ 𝔹_d`.
    pub fn doubling_ratio(&self, r: T, method: MassMethod, budget: usize, seed: u64) -> Result<DoublingEstimate<T>> {
        if !(r > T::zero()) || r > T::lit(0.25) {
            return Err(domain!("doubling probe needs 0 < r <= 0.25, got {}", r));
        }
        let full_box = self.doubling_box(r)?;
        if full_box.farthest_norm() >= T::one() {
            return Err(domain!("S_r escapes the unit ball for r = {}", r));
        }
        let half_box = full_box.dilate(T::lit(0.5))?;
        let full = self.box_mass(&full_box, method, budget, derive_seed(seed, &[1]))?;
        let half = self.box_mass(&half_box, method, budget, derive_seed(seed, &[2]))?;
        if !(half.value > T::zero()) {
            return Err(Error::Numerical("half box received zero mass; raise the budget".into()));
        }
        let ratio = full.value / half.value;
        let rel = full.error / full.value.max(T::min_positive_value()) + half.error / half.value;
        Ok(DoublingEstimate { ratio, error: ratio * rel, full, half })
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(param!("expected a {}-dimensional point, got {}", self.dim, d));
        }
        Ok(())
    }
}
