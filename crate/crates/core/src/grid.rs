//! The discretized spherical uniform `U_d^n`: `n_R` concentric rings of
//! `n_S` directions each, plus an origin atom carrying `n_0` unit masses.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::assignment::solve_slots;
use crate::error::{domain, param, Result};
use crate::points::PointSet;
use crate::rng::{stream, unit_direction};
use crate::scalar::Scalar;

/// Shape parameters of a grid; enough to rebuild it bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub n_rings: usize,
    pub n_directions: usize,
    pub n_origin: usize,
    /// Seed of the random rotation applied to the direction set; `None` keeps
    /// the canonical orientation.
    pub rotation_seed: Option<u64>,
}

impl GridSpec {
    pub fn new(d: usize, n_rings: usize, n_directions: usize, n_origin: usize, rotation_seed: Option<u64>) -> Self {
        Self { d, n_rings, n_directions, n_origin, rotation_seed }
    }

    /// Total number of unit masses `n = n_R·n_S + n_0`.
    pub fn n(&self) -> usize {
        self.n_rings * self.n_directions + self.n_origin
    }

    /// Factorization used for a sample of size `n` in the convergence
    /// experiments: `n_R = ⌊√(n/2)⌋`, `n_S = ⌊n/n_R⌋`, `n_0 = n − n_R·n_S`.
    pub fn for_sample_size(d: usize, n: usize, rotation_seed: Option<u64>) -> Result<Self> {
        if n == 0 {
            return Err(param!("sample size must be positive"));
        }
        let n_rings = ((n as f64 / 2.0).sqrt().floor() as usize).max(1);
        let n_directions = n / n_rings;
        Ok(Self::new(d, n_rings, n_directions, n - n_rings * n_directions, rotation_seed))
    }
}

/// Weighted point set approximating `U_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile<T>", into = "GridFile<T>", bound = "T: Scalar")]
pub struct SphericalGrid<T: Scalar> {
    spec: GridSpec,
    points: PointSet<T>,
    weights: Vec<T>,
    radii: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct GridFile<T: Scalar> {
    d: usize,
    n_rings: usize,
    n_directions: usize,
    n_origin: usize,
    rotation_seed: Option<u64>,
    points: PointSet<T>,
    weights: Vec<T>,
}

impl<T: Scalar> From<SphericalGrid<T>> for GridFile<T> {
    fn from(g: SphericalGrid<T>) -> Self {
        let s = g.spec;
        GridFile {
            d: s.d,
            n_rings: s.n_rings,
            n_directions: s.n_directions,
            n_origin: s.n_origin,
            rotation_seed: s.rotation_seed,
            points: g.points,
            weights: g.weights,
        }
    }
}

impl<T: Scalar> TryFrom<GridFile<T>> for SphericalGrid<T> {
    type Error = crate::Error;

    fn try_from(f: GridFile<T>) -> Result<Self> {
        let spec = GridSpec::new(f.d, f.n_rings, f.n_directions, f.n_origin, f.rotation_seed);
        let expected = spec.n_rings * spec.n_directions + usize::from(spec.n_origin > 0);
        if f.points.len() != expected || f.weights.len() != expected || (expected > 0 && f.points.dim() != spec.d) {
            return Err(param!("grid file does not match its declared shape"));
        }
        let ring = spec.n_rings * spec.n_directions;
        let radii = (0..expected)
            .map(|i| if i < ring { ring_radius(i / spec.n_directions + 1, spec.n_rings) } else { T::zero() })
            .collect();
        Ok(Self { spec, points: f.points, weights: f.weights, radii })
    }
}

fn ring_radius<T: Scalar>(j: usize, n_rings: usize) -> T {
    T::from_usize_lossy(j) / T::from_usize_lossy(n_rings + 1)
}

/// Uniformly random rotation of ℝᵈ (Gram–Schmidt on a Gaussian matrix), row-major.
fn random_rotation(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    let mut q = vec![0.0f64; d * d];
    let mut row = vec![0.0f64; d];
    let mut k = 0;
    while k < d {
        unit_direction(&mut rng, &mut row);
        for j in 0..k {
            let p: f64 = (0..d).map(|a| row[a] * q[j * d + a]).sum();
            for a in 0..d {
                row[a] -= p * q[j * d + a];
            }
        }
        let n: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-8 {
            continue;
        }
        for a in 0..d {
            q[k * d + a] = row[a] / n;
        }
        k += 1;
    }
    q
}

/// `n` well-spread unit vectors in ℝᵈ, row-major.
fn directions(d: usize, n: usize, rotation_seed: Option<u64>) -> Vec<f64> {
    let mut out = vec![0.0f64; d * n];
    match d {
        1 => {
            for k in 0..n {
                out[k] = if k % 2 == 0 { 1.0 } else { -1.0 };
            }
            return out;
        }
        2 => {
            let offset = match rotation_seed {
                Some(s) => std::f64::consts::TAU * stream(s).random::<f64>(),
                None => 0.0,
            };
            for k in 0..n {
                let a = offset + std::f64::consts::TAU * k as f64 / n as f64;
                out[2 * k] = a.cos();
                out[2 * k + 1] = a.sin();
            }
            return out;
        }
        3 => {
            // Fibonacci spiral: equal-area latitude bands, golden-angle longitudes.
            let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            for k in 0..n {
                let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                out[3 * k] = rho * phi.cos();
                out[3 * k + 1] = rho * phi.sin();
                out[3 * k + 2] = z;
            }
        }
        _ => {
            // Kronecker sequence with the generalized golden ratio, pushed through
            // the Gaussian quantile and normalized.
            let mut phi = 2.0f64;
            for _ in 0..64 {
                phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
            }
            let alpha: Vec<f64> = (1..=d).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
            let normal = Normal::standard();
            for k in 0..n {
                let row = &mut out[d * k..d * (k + 1)];
                for (a, r) in row.iter_mut().enumerate() {
                    *r = normal.inverse_cdf((0.5 + alpha[a] * (k + 1) as f64).fract());
                }
                let nrm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                row.iter_mut().for_each(|v| *v /= nrm);
            }
        }
    }
    if let Some(seed) = rotation_seed {
        let q = random_rotation(d, seed);
        let mut tmp = vec![0.0f64; d];
        for k in 0..n {
            let row = &mut out[d * k..d * (k + 1)];
            for (a, t) in tmp.iter_mut().enumerate() {
                *t = (0..d).map(|b| q[a * d + b] * row[b]).sum();
            }
            row.copy_from_slice(&tmp);
        }
    }
    out
}

impl<T: Scalar> SphericalGrid<T> {
    /// Builds the grid. Ring `j` (1-based) has radius `j/(n_R+1)`; points are
    /// ordered ring by ring, and the origin atom (if `n_0 > 0`) comes last.
    pub fn build(spec: GridSpec) -> Result<Self> {
        if spec.d < 1 {
            return Err(domain!("grid dimension must be at least 1"));
        }
        if spec.n_rings < 1 || spec.n_directions < 1 {
            return Err(param!("a grid needs at least one ring and one direction"));
        }
        let d = spec.d;
        let n = T::from_usize_lossy(spec.n());
        let dirs = directions(d, spec.n_directions, spec.rotation_seed);
        let mut points = PointSet::with_capacity(d, spec.n_rings * spec.n_directions + 1);
        let mut radii = Vec::new();
        let mut row = vec![T::zero(); d];
        for j in 1..=spec.n_rings {
            let r: T = ring_radius(j, spec.n_rings);
            for k in 0..spec.n_directions {
                for a in 0..d {
                    row[a] = r * T::lit(dirs[k * d + a]);
                }
                points.push(&row);
                radii.push(r);
            }
        }
        let mut weights = vec![T::one() / n; points.len()];
        if spec.n_origin > 0 {
            points.push(&vec![T::zero(); d]);
            radii.push(T::zero());
            weights.push(T::from_usize_lossy(spec.n_origin) / n);
        }
        Ok(Self { spec, points, weights, radii })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.spec.d
    }
    /// Number of unit masses `n` (origin atom counted `n_0` times).
    pub fn n(&self) -> usize {
        self.spec.n()
    }
    /// Distinct support points (origin atom once).
    pub fn points(&self) -> &PointSet<T> {
        &self.points
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }
    /// Exact ring radius `j/(n_R+1)` of each support point (0 for the origin).
    pub fn radii(&self) -> &[T] {
        &self.radii
    }
    pub fn origin_index(&self) -> Option<usize> {
        (self.spec.n_origin > 0).then_some(self.spec.n_rings * self.spec.n_directions)
    }

    /// Support point occupying assignment slot `slot` (slots `≥ n_R·n_S` are origin copies).
    #[inline]
    pub fn point_of_slot(&self, slot: usize) -> usize {
        let ring = self.spec.n_rings * self.spec.n_directions;
        if slot < ring {
            slot
        } else {
            ring
        }
    }

    /// The `n` unit-mass slots with the origin atom expanded.
    pub fn slots(&self) -> PointSet<T> {
        let mut out = PointSet::with_capacity(self.dim(), self.n());
        for s in 0..self.n() {
            out.push(self.points.row(self.point_of_slot(s)));
        }
        out
    }

    /// Estimate of `W_2(U_d^n, U_d)`, from an exact assignment between the
    /// slots (each replicated `⌊budget/n⌋` times) and that many `U_d` draws.
    pub fn weak_convergence_diagnostic(&self, budget: usize, seed: u64) -> Result<T> {
        let n = self.n();
        if budget < n {
            return Err(param!("diagnostic budget {} is smaller than the grid size {}", budget, n));
        }
        let reps = budget / n;
        let u = crate::measure::SphericalUniform::<T>::new(self.dim())?;
        let draws = u.sample(reps * n, seed);
        self.w2_against(&draws)
    }

    /// `W_2` between the grid measure and the empirical measure of `draws`,
    /// whose size must be a multiple of `n`.
    pub fn w2_against(&self, draws: &PointSet<T>) -> Result<T> {
        let n = self.n();
        if draws.is_empty() || draws.len() % n != 0 {
            return Err(param!("{} draws is not a positive multiple of the grid size {}", draws.len(), n));
        }
        let reps = draws.len() / n;
        let slots = self.slots();
        let mut targets = PointSet::with_capacity(self.dim(), draws.len());
        for _ in 0..reps {
            for s in slots.rows() {
                targets.push(s);
            }
        }
        let sol = solve_slots(draws, &targets)?;
        Ok((sol.total_cost / T::from_usize_lossy(draws.len())).max(T::zero()).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm;

    #[test]
    fn small_planar_grid() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(2, 2, 4, 0, None)).unwrap();
        assert_eq!(g.points().len(), 8);
        let expect = [
            [1.0 / 3.0, 0.0],
            [0.0, 1.0 / 3.0],
            [-1.0 / 3.0, 0.0],
            [0.0, -1.0 / 3.0],
            [2.0 / 3.0, 0.0],
            [0.0, 2.0 / 3.0],
            [-2.0 / 3.0, 0.0],
            [0.0, -2.0 / 3.0],
        ];
        for (p, e) in g.points().rows().zip(expect.iter()) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15, "{p:?} vs {e:?}");
        }
        assert!(g.weights().iter().all(|&w| w == 0.125));
    }

    #[test]
    fn single_point_grid() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(2, 1, 1, 0, None)).unwrap();
        assert_eq!(g.points().len(), 1);
        assert!((norm(g.points().row(0)) - 0.5).abs() < 1e-15);
        assert_eq!(g.weights(), &[1.0]);
    }

    #[test]
    fn origin_atom_weight_and_slots() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(3, 3, 5, 4, Some(9))).unwrap();
        assert_eq!(g.n(), 19);
        assert_eq!(g.points().len(), 16);
        assert_eq!(g.weights()[15], 4.0 / 19.0);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(g.point_of_slot(17), 15);
        assert_eq!(g.slots().len(), 19);
        for (i, p) in g.points().rows().enumerate().take(15) {
            let r = norm(p);
            assert!((r - g.radii()[i]).abs() < 1e-15);
            assert!(r < 1.0);
        }
    }

    #[test]
    fn weighted_radius_mean_tends_to_half() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(2, 200, 8, 0, Some(1))).unwrap();
        let m: f64 = g.points().rows().zip(g.weights()).map(|(p, w)| w * norm(p)).sum();
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn antipodal_direction_sum_vanishes_in_the_plane() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(2, 3, 10, 2, Some(4))).unwrap();
        let mut s = [0.0; 2];
        for (p, w) in g.points().rows().zip(g.weights()).take(30) {
            let r = norm(p);
            s[0] += w * p[0] / r;
            s[1] += w * p[1] / r;
        }
        assert!(norm(&s) <= 1e-8);
    }

    #[test]
    fn spatial_direction_sum_is_small() {
        for ns in [50usize, 200, 800] {
            let g = SphericalGrid::<f64>::build(GridSpec::new(3, 1, ns, 0, Some(2))).unwrap();
            let mut s = [0.0; 3];
            for p in g.points().rows() {
                let r = norm(p);
                for k in 0..3 {
                    s[k] += p[k] / r / ns as f64;
                }
            }
            assert!(norm(&s) <= 1.0 / (ns as f64).sqrt(), "ns={ns} |sum|={}", norm(&s));
        }
    }

    #[test]
    fn higher_dimensions_build() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(5, 2, 40, 1, Some(3))).unwrap();
        for (i, p) in g.points().rows().enumerate().take(80) {
            assert!((norm(p) - g.radii()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(SphericalGrid::<f64>::build(GridSpec::new(0, 1, 1, 0, None)), Err(crate::Error::Domain(_))));
        assert!(SphericalGrid::<f64>::build(GridSpec::new(2, 0, 1, 0, None)).is_err());
    }

    #[test]
    fn deterministic_and_json_round_trip() {
        let spec = GridSpec::new(3, 4, 7, 2, Some(77));
        let a = SphericalGrid::<f64>::build(spec).unwrap();
        let b = SphericalGrid::<f64>::build(spec).unwrap();
        assert_eq!(a, b);
        let js = serde_json::to_string(&a).unwrap();
        let back: SphericalGrid<f64> = serde_json::from_str(&js).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn sample_size_factorization() {
        let s = GridSpec::for_sample_size(2, 1600, None).unwrap();
        assert_eq!((s.n_rings, s.n_directions, s.n_origin), (28, 57, 4));
        assert_eq!(s.n(), 1600);
        let s = GridSpec::for_sample_size(2, 100, None).unwrap();
        assert_eq!((s.n_rings, s.n_directions, s.n_origin), (7, 14, 2));
    }

    #[test]
    fn diagnostic_zero_on_own_support_and_budget_check() {
        let g = SphericalGrid::<f64>::build(GridSpec::new(2, 2, 3, 1, Some(5))).unwrap();
        let mut draws = g.slots();
        for s in g.slots().rows() {
            draws.push(s);
        }
        assert!(g.w2_against(&draws).unwrap().abs() < 1e-12);
        assert!(matches!(g.weak_convergence_diagnostic(3, 1), Err(crate::Error::Parameter(_))));
    }

    #[test]
    fn diagnostic_single_midpoint() {
        // W_2 to a single atom c is sqrt(E|U − c|²); estimate the expectation independently.
        let g = SphericalGrid::<f64>::build(GridSpec::new(2, 1, 1, 0, None)).unwrap();
        let w = g.weak_convergence_diagnostic(1000, 3).unwrap();
        let u = crate::measure::SphericalUniform::<f64>::new(2).unwrap();
        let big = u.sample(200_000, 12345);
        let m2 = big.rows().map(|p| (p[0] - 0.5).powi(2) + p[1] * p[1]).sum::<f64>() / 2e5;
        assert!((w - m2.sqrt()).abs() < 0.03, "diagnostic {w} vs {}", m2.sqrt());
    }

    #[test]
    fn diagnostic_decreases_with_refinement() {
        let coarse = SphericalGrid::<f64>::build(GridSpec::new(2, 4, 8, 0, Some(1))).unwrap();
        let fine = SphericalGrid::<f64>::build(GridSpec::new(2, 16, 32, 0, Some(1))).unwrap();
        let a = coarse.weak_convergence_diagnostic(1024, 8).unwrap();
        let b = fine.weak_convergence_diagnostic(1024, 8).unwrap();
        assert!(b < a, "coarse {a} fine {b}");
    }
}
