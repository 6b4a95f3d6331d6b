use serde::{Deserialize, Serialize};

use super::{MaxAffinePotential, MoreauPoint};
use crate::assignment::{self, AssignmentResult};
use crate::error::{domain, param, Error, Result};
use crate::grid::{GridSpec, SphericalGrid};
use crate::points::PointSet;
use crate::scalar::{dist2, dot, norm, Scalar};

/// Max-affine potential whose slopes are the grid support points, with
/// intercepts chosen so that every sample point lies strictly inside the
/// region of its assigned piece whenever the assignment allows it.
///
/// Optimal assignment duals sit on a vertex of the dual polytope, where many
/// sample points are tied between two pieces. Instead, writing
/// `c(k, j) = max_{i ∈ k} ⟨x_i, u_j − u_k⟩`, any `v` with `v_j − v_k ≥ c(k, j)`
/// works; with `L` the longest-path closure of `c`, the centered choice
/// `v_b = Σ_r (L[r][b] − L[b][r]) / 2P` satisfies every constraint with slack
/// proportional to the negative cycle weight through each edge.
pub fn build_empirical_potential<T: Scalar>(
    sample: &PointSet<T>,
    grid: &SphericalGrid<T>,
    result: &AssignmentResult<T>,
) -> Result<MaxAffinePotential<T>> {
    let n = sample.len();
    if n != grid.n() || result.sigma.len() != n || sample.dim() != grid.dim() {
        return Err(param!("sample, grid and assignment sizes disagree"));
    }
    let slots = grid.slots();
    let scale = T::one() + sample.rows().map(|x| norm(x)).fold(T::zero(), T::max);
    let tol = T::tol(1e-9) * scale * scale;
    if result.max_dual_violation(sample, &slots) > tol {
        return Err(Error::Consistency("assignment duals are not optimal".into()));
    }

    let pts = grid.points();
    let p = pts.len();
    let piece: Vec<usize> = result.sigma.iter().map(|&s| grid.point_of_slot(s)).collect();
    let ninf = T::neg_infinity();
    let mut l = vec![ninf; p * p];
    for (i, x) in sample.rows().enumerate() {
        let k = piece[i];
        let base = dot(x, pts.row(k));
        let row = &mut l[k * p..(k + 1) * p];
        for (j, cell) in row.iter_mut().enumerate() {
            let w = dot(x, pts.row(j)) - base;
            if w > *cell {
                *cell = w;
            }
        }
    }
    for k in 0..p {
        l[k * p + k] = T::zero();
    }
    longest_paths(&mut l, p);
    let cyc_tol = T::tol(1e-9) * scale;
    for k in 0..p {
        if l[k * p + k] > cyc_tol {
            return Err(Error::Consistency("assignment is not cyclically monotone".into()));
        }
        l[k * p + k] = T::zero();
    }
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::Consistency("some grid point carries no sample".into()));
    }
    let denom = T::lit(2.0) * T::from_usize_lossy(p);
    let mut v: Vec<T> = (0..p)
        .map(|b| (0..p).map(|r| l[r * p + b] - l[b * p + r]).sum::<T>() / denom)
        .collect();
    let lo = v.iter().copied().fold(T::infinity(), T::min);
    v.iter_mut().for_each(|x| *x = *x - lo);

    let pot = MaxAffinePotential::new(pts.clone(), v)?;
    for (i, x) in sample.rows().enumerate() {
        let top = pot.eval(x);
        if pot.piece(piece[i], x) < top - tol {
            return Err(Error::Consistency(format!("assigned piece is not active at sample {}", i)));
        }
    }
    Ok(pot)
}

const TILE: usize = 64;

/// In-place max-plus Floyd–Warshall, tiled so each relaxation works on
/// cache-resident blocks.
fn longest_paths<T: Scalar>(l: &mut [T], p: usize) {
    let nb = p.div_ceil(TILE);
    let span = |b: usize| b * TILE..((b + 1) * TILE).min(p);
    let mut buf = vec![T::zero(); TILE];
    for kb in 0..nb {
        let ks = span(kb);
        relax(l, p, span(kb), span(kb), ks.clone(), &mut buf);
        for b in (0..nb).filter(|&b| b != kb) {
            relax(l, p, span(kb), span(b), ks.clone(), &mut buf);
            relax(l, p, span(b), span(kb), ks.clone(), &mut buf);
        }
        for ib in (0..nb).filter(|&b| b != kb) {
            for jb in (0..nb).filter(|&b| b != kb) {
                relax(l, p, span(ib), span(jb), ks.clone(), &mut buf);
            }
        }
    }
}

fn relax<T: Scalar>(
    l: &mut [T],
    p: usize,
    is: std::ops::Range<usize>,
    js: std::ops::Range<usize>,
    ks: std::ops::Range<usize>,
    buf: &mut [T],
) {
    let width = js.len();
    for k in ks {
        buf[..width].copy_from_slice(&l[k * p + js.start..k * p + js.end]);
        for i in is.clone() {
            let lik = l[i * p + k];
            if lik == T::neg_infinity() {
                continue;
            }
            for (cell, &w) in l[i * p + js.start..i * p + js.end].iter_mut().zip(&buf[..width]) {
                let cand = lik + w;
                *cell = if cand > *cell { cand } else { *cell };
            }
        }
    }
}

/// Rank and sign of one sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RankSign<T> {
    pub rank: T,
    pub sign: Vec<T>,
}

/// Empirical center-outward distribution function `F̂ = ∇e_ε φ̂` together
/// with its fitted data.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMap<T: Scalar> {
    potential: MaxAffinePotential<T>,
    epsilon: T,
    grid: SphericalGrid<T>,
    sample: PointSet<T>,
    sigma: Vec<usize>,
    piece_of_sample: Vec<usize>,
    margins: Vec<T>,
    strict: bool,
    pinned: Vec<usize>,
}

impl<T: Scalar> EmpiricalMap<T> {
    /// Assign `sample` to `grid`, build the potential and pick `ε`.
    pub fn fit(sample: &PointSet<T>, grid: &SphericalGrid<T>, epsilon: Option<T>) -> Result<Self> {
        let result = assignment::solve(sample, grid)?;
        Self::from_assignment(sample, grid, &result, epsilon)
    }

    pub fn from_assignment(
        sample: &PointSet<T>,
        grid: &SphericalGrid<T>,
        result: &AssignmentResult<T>,
        epsilon: Option<T>,
    ) -> Result<Self> {
        let potential = build_empirical_potential(sample, grid, result)?;
        Self::assemble(potential, sample.clone(), grid.clone(), result.sigma.clone(), epsilon)
    }

    fn assemble(
        potential: MaxAffinePotential<T>,
        sample: PointSet<T>,
        grid: SphericalGrid<T>,
        sigma: Vec<usize>,
        epsilon: Option<T>,
    ) -> Result<Self> {
        let piece_of_sample: Vec<usize> = sigma.iter().map(|&s| grid.point_of_slot(s)).collect();
        let margins: Vec<T> = sample
            .rows()
            .zip(&piece_of_sample)
            .map(|(x, &k)| {
                let own = potential.piece(k, x);
                let rival = (0..potential.len())
                    .filter(|&j| j != k)
                    .map(|j| potential.piece(j, x))
                    .fold(T::neg_infinity(), T::max);
                own - rival
            })
            .collect();
        let zero_tol = T::tol(1e-12);
        let pinned: Vec<usize> = (0..margins.len()).filter(|&i| margins[i] <= zero_tol).collect();
        let eps_m = sample
            .rows()
            .zip(&margins)
            .filter(|(_, &m)| m > zero_tol)
            .map(|(x, &m)| T::lit(0.5) * m / (T::one() + norm(x)))
            .fold(T::infinity(), T::min);
        let diam = sample.diameter();
        let cap = T::lit(1e-2) * diam;
        let auto = if cap > T::zero() { eps_m.min(cap) } else { eps_m };
        let auto = if auto.is_finite() { auto } else { T::lit(1e-2) };
        let eps = match epsilon {
            Some(e) if !(e > T::zero()) || !e.is_finite() => {
                return Err(param!("epsilon must be positive and finite"));
            }
            Some(e) => e,
            None => auto,
        };
        let strict = pinned.is_empty() && eps <= eps_m;
        Ok(Self { potential, epsilon: eps, grid, sample, sigma, piece_of_sample, margins, strict, pinned })
    }

    pub fn potential(&self) -> &MaxAffinePotential<T> {
        &self.potential
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }
    pub fn grid(&self) -> &SphericalGrid<T> {
        &self.grid
    }
    pub fn sample(&self) -> &PointSet<T> {
        &self.sample
    }
    /// Assignment slot of each sample point.
    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }
    /// Grid support point (piece) of each sample point.
    pub fn piece_of_sample(&self) -> &[usize] {
        &self.piece_of_sample
    }
    /// Gap between the assigned piece and the best rival at each sample point.
    pub fn margins(&self) -> &[T] {
        &self.margins
    }
    /// True when `F̂(x_i) = u_σ(i)` is guaranteed at every sample point.
    pub fn is_strict(&self) -> bool {
        self.strict
    }
    /// Sample points whose margin is zero.
    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Full Moreau evaluation at `x`.
    pub fn moreau(&self, x: &[T]) -> Result<MoreauPoint<T>> {
        if x.len() != self.dim() {
            return Err(param!("point has dimension {}, expected {}", x.len(), self.dim()));
        }
        self.potential.moreau(x, self.epsilon)
    }

    /// `F̂(x)`.
    pub fn moreau_map(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.moreau(x)?.gradient)
    }

    /// `F̂` at each sample point; pinned points report their assigned grid point.
    pub fn sample_images(&self) -> Result<PointSet<T>> {
        let mut out = PointSet::with_capacity(self.dim(), self.sample.len());
        for (i, x) in self.sample.rows().enumerate() {
            if self.pinned.binary_search(&i).is_ok() {
                out.push(self.grid.points().row(self.piece_of_sample[i]));
            } else {
                out.push(&self.moreau_map(x)?);
            }
        }
        Ok(out)
    }

    /// `e_ε φ̂(x)`.
    pub fn envelope(&self, x: &[T]) -> Result<T> {
        Ok(self.moreau(x)?.envelope)
    }

    /// `Q̂(u)`: the sample point carried by the grid point nearest to `u`.
    /// Ties go to the lower grid index, then the lower sample index.
    pub fn empirical_quantile(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.dim() {
            return Err(param!("point has dimension {}, expected {}", u.len(), self.dim()));
        }
        if !(norm(u) < T::one()) {
            return Err(domain!("quantile argument must lie in the open unit ball"));
        }
        let pts = self.grid.points();
        let mut best = 0;
        let mut best_d = T::infinity();
        for (j, g) in pts.rows().enumerate() {
            let d = dist2(g, u);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        let i = self.piece_of_sample.iter().position(|&k| k == best).expect("every grid point carries a sample");
        Ok(self.sample.row(i).to_vec())
    }

    /// Rank `|u_σ(i)|` and sign `u_σ(i)/|u_σ(i)|` (zero at the origin) per sample point.
    pub fn ranks_and_signs(&self) -> Vec<RankSign<T>> {
        let pts = self.grid.points();
        self.piece_of_sample
            .iter()
            .map(|&k| {
                let rank = self.grid.radii()[k];
                let u = pts.row(k);
                let sign = if rank > T::zero() {
                    let r = norm(u);
                    u.iter().map(|&c| c / r).collect()
                } else {
                    vec![T::zero(); u.len()]
                };
                RankSign { rank, sign }
            })
            .collect()
    }

    pub fn to_file(&self) -> MapFile<T> {
        MapFile {
            d: self.dim(),
            epsilon: self.epsilon,
            slopes: self.potential.slopes().clone(),
            weights: self.grid.weights().to_vec(),
            intercepts: self.potential.intercepts().to_vec(),
            sample: self.sample.clone(),
            sigma: self.sigma.clone(),
            grid: *self.grid.spec(),
        }
    }

    /// Rebuild from a persisted map; the grid is regenerated from its spec and
    /// must reproduce the stored slopes exactly.
    pub fn from_file(file: MapFile<T>) -> Result<Self> {
        let grid = SphericalGrid::build(file.grid)?;
        if file.d != grid.dim() || file.sample.dim() != file.d {
            return Err(param!("map file dimensions are inconsistent"));
        }
        if file.slopes != *grid.points() || file.weights != grid.weights() {
            return Err(param!("stored slopes or weights do not match the grid spec"));
        }
        if file.sample.len() != grid.n() || file.sigma.len() != grid.n() {
            return Err(param!("stored sample and permutation must have {} entries", grid.n()));
        }
        let mut seen = vec![false; grid.n()];
        for &s in &file.sigma {
            if s >= grid.n() || std::mem::replace(&mut seen[s], true) {
                return Err(param!("stored sigma is not a permutation"));
            }
        }
        let potential = MaxAffinePotential::new(file.slopes, file.intercepts)?;
        if potential.len() != grid.points().len() {
            return Err(param!("one intercept per slope required"));
        }
        Self::assemble(potential, file.sample, grid, file.sigma, Some(file.epsilon))
    }
}

/// On-disk form of an [`EmpiricalMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct MapFile<T: Scalar> {
    pub d: usize,
    pub epsilon: T,
    pub slopes: PointSet<T>,
    /// Grid mass carried by each slope.
    pub weights: Vec<T>,
    pub intercepts: Vec<T>,
    pub sample: PointSet<T>,
    pub sigma: Vec<usize>,
    pub grid: GridSpec,
}

impl<T: Scalar> Serialize for EmpiricalMap<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for EmpiricalMap<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = MapFile::<T>::deserialize(d)?;
        Self::from_file(f).map_err(serde::de::Error::custom)
    }
}
