//! Population laws with closed-form center-outward maps: the spherical
//! uniform `U_d`, the two-ball law of `U + sgn(U₁)e₁`, and the scaled balls
//! `R·U`. Also Monte-Carlo checks of the Monge–Ampère density identities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cubature::{integrate_box, CubatureOptions};
use crate::error::{domain, param, Result};
use crate::measure::{surface_constant, ConvexBox, SphericalUniform};
use crate::points::PointSet;
use crate::rng::{halton, stream};
use crate::scalar::{norm, Scalar};

/// `F(x) = x` on the closed ball, `x/|x|` outside.
pub fn spherical_uniform_f<T: Scalar>(x: &[T]) -> Vec<T> {
    let r = norm(x);
    if r <= T::one() {
        x.to_vec()
    } else {
        x.iter().map(|&c| c / r).collect()
    }
}

fn sgn<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        T::one()
    } else if t < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Center-outward distribution function of `U + sgn(U₁)e₁`.
pub fn two_ball_f<T: Scalar>(x: &[T]) -> Vec<T> {
    if x[0].abs() >= T::one() {
        let mut y = x.to_vec();
        y[0] = y[0] - sgn(x[0]);
        let r = norm(&y);
        if r > T::one() {
            y.iter_mut().for_each(|c| *c = *c / r);
        }
        y
    } else {
        let mut y = x.to_vec();
        y[0] = T::zero();
        let r = norm(&y[1..]);
        if r > T::one() {
            y.iter_mut().for_each(|c| *c = *c / r);
        }
        y
    }
}

/// `F(x) = x/R` on `|x| ≤ R`, `x/|x|` outside.
pub fn scaled_ball_f<T: Scalar>(radius: T, x: &[T]) -> Result<Vec<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(domain!("radius must be positive, got {}", radius));
    }
    let r = norm(x);
    Ok(if r <= radius { x.iter().map(|&c| c / radius).collect() } else { x.iter().map(|&c| c / r).collect() })
}

/// Bounded-density witnesses on `𝒳 ∩ R𝔹_d`, when they exist for every `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionA {
    pub holds: bool,
    /// Lower and upper density bounds (uniform in `R` for these families).
    pub bounds: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Distribution {
    SphericalUniform { d: usize },
    TwoBall { d: usize },
    ScaledBall { d: usize, radius: f64 },
}

impl Distribution {
    /// Parse `"ud"`, `"two-ball"` or `"scaled-ball:R"`.
    pub fn parse(name: &str, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(param!("dimension must be at least 1"));
        }
        let dist = match name {
            "ud" => Self::SphericalUniform { d },
            "two-ball" => Self::TwoBall { d },
            other => match other.strip_prefix("scaled-ball:") {
                Some(r) => {
                    let radius: f64 = r.parse().map_err(|_| param!("bad radius in {:?}", other))?;
                    if !(radius > 0.0) || !radius.is_finite() {
                        return Err(domain!("radius must be positive, got {}", radius));
                    }
                    Self::ScaledBall { d, radius }
                }
                None => return Err(param!("unknown distribution {:?}", other)),
            },
        };
        Ok(dist)
    }

    pub fn label(&self) -> String {
        match self {
            Self::SphericalUniform { .. } => "ud".into(),
            Self::TwoBall { .. } => "two-ball".into(),
            Self::ScaledBall { radius, .. } => format!("scaled-ball:{}", radius),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::SphericalUniform { d } | Self::TwoBall { d } | Self::ScaledBall { d, .. } => d,
        }
    }

    fn radius(&self) -> f64 {
        match *self {
            Self::ScaledBall { radius, .. } => radius,
            _ => 1.0,
        }
    }

    pub fn sample<T: Scalar>(&self, n: usize, seed: u64) -> Result<PointSet<T>> {
        let mut s = SphericalUniform::<T>::new(self.dim())?.sample(n, seed);
        match self {
            Self::SphericalUniform { .. } => {}
            Self::TwoBall { .. } => {
                for i in 0..n {
                    let row = s.row_mut(i);
                    row[0] = row[0] + sgn(row[0]);
                }
            }
            Self::ScaledBall { radius, .. } => {
                let r = T::lit(*radius);
                for i in 0..n {
                    s.row_mut(i).iter_mut().for_each(|c| *c = *c * r);
                }
            }
        }
        Ok(s)
    }

    /// Interior of the support `𝒳`.
    pub fn in_support_interior<T: Scalar>(&self, x: &[T]) -> bool {
        match self {
            Self::SphericalUniform { .. } | Self::ScaledBall { .. } => norm(x) < T::lit(self.radius()),
            Self::TwoBall { .. } => {
                if !(x[0].abs() > T::one()) {
                    return false;
                }
                let mut y = x.to_vec();
                y[0] = y[0] - sgn(x[0]);
                norm(&y) < T::one()
            }
        }
    }

    /// `F(𝒳)`, where the quantile map is continuous and inverts `F`.
    pub fn in_image_interior<T: Scalar>(&self, u: &[T]) -> bool {
        let r = norm(u);
        let punctured = r > T::zero() && r < T::one();
        match self {
            Self::TwoBall { .. } => punctured && u[0] != T::zero(),
            _ => punctured,
        }
    }

    /// Density `p(x)`; zero off `𝒳` and `+∞` at the singular points.
    pub fn density<T: Scalar>(&self, x: &[T]) -> T {
        if !self.in_support_interior(x) {
            return T::zero();
        }
        let d = self.dim();
        let a = T::lit(surface_constant(d));
        let u_d = |r: T| T::one() / (a * r.powi(d as i32 - 1));
        match self {
            Self::SphericalUniform { .. } => u_d(norm(x)),
            Self::TwoBall { .. } => {
                let mut y = x.to_vec();
                y[0] = y[0] - sgn(x[0]);
                u_d(norm(&y))
            }
            Self::ScaledBall { radius, .. } => {
                let rr = T::lit(*radius);
                u_d(norm(x) / rr) / rr.powi(d as i32)
            }
        }
    }

    pub fn f_pm<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::SphericalUniform { .. } => spherical_uniform_f(x),
            Self::TwoBall { .. } => two_ball_f(x),
            Self::ScaledBall { radius, .. } => scaled_ball_f(T::lit(*radius), x).expect("radius validated"),
        }
    }

    /// `Q(u)` on the closed unit ball.
    pub fn q_pm<T: Scalar>(&self, u: &[T]) -> Result<Vec<T>> {
        if norm(u) > T::one() {
            return Err(domain!("quantile argument must lie in the closed unit ball"));
        }
        Ok(match self {
            Self::SphericalUniform { .. } => u.to_vec(),
            Self::TwoBall { .. } => {
                let mut x = u.to_vec();
                x[0] = x[0] + sgn(u[0]);
                x
            }
            Self::ScaledBall { radius, .. } => u.iter().map(|&c| c * T::lit(*radius)).collect(),
        })
    }

    /// Distance from `x` to the median set `Q(0)`: the origin, or the segment
    /// `[-e₁, e₁]` for the two-ball law.
    pub fn median_set_distance<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Self::TwoBall { .. } => {
                let mut y = x.to_vec();
                y[0] = (x[0].abs() - T::one()).max(T::zero());
                norm(&y)
            }
            _ => norm(x),
        }
    }

    pub fn assumption_a(&self) -> AssumptionA {
        if self.dim() == 1 {
            let p = 0.5 / self.radius();
            AssumptionA { holds: true, bounds: Some((p, p)) }
        } else {
            // unbounded density at the center (or at ±e₁, on the support boundary)
            AssumptionA { holds: false, bounds: None }
        }
    }

    fn check_region_in_support(&self, region: &ConvexBox<f64>) -> Result<()> {
        let d = self.dim();
        let mut corner = vec![0.0; d];
        let mut ok = self.in_support_interior(&region.center());
        for mask in 0..(1usize << d) {
            for k in 0..d {
                corner[k] = if mask >> k & 1 == 1 { region.upper()[k] } else { region.lower()[k] };
            }
            ok &= self.in_support_interior(&corner);
        }
        // both components are convex, so the closed box sits in one of them
        // as long as no two corners straddle the slab |x₁| ≤ 1
        let same_side = match self {
            Self::TwoBall { .. } => region.lower()[0] > 1.0 || region.upper()[0] < -1.0,
            _ => true,
        };
        if ok && same_side {
            Ok(())
        } else {
            Err(domain!("region is not contained in the support interior"))
        }
    }
}

/// Outcome of a density-identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    /// The integral side, by adaptive quadrature.
    pub integral: f64,
    /// The image-volume side, by Monte-Carlo membership.
    pub image_volume: f64,
    /// Standard error of `image_volume`.
    pub image_error: f64,
    pub discrepancy: f64,
    pub passed: bool,
}

pub const DENSITY_TOLERANCE: f64 = 0.02;

/// Compares `a_d ∫_A p|F|^{d-1}` with `ℓ_d(F(A))`.
pub fn ma_density_check(dist: &Distribution, region: &ConvexBox<f64>, budget: usize, seed: u64) -> Result<DensityCheck> {
    check_box_dim(dist, region)?;
    dist.check_region_in_support(region)?;
    let d = dist.dim();
    let a = surface_constant(d);
    let integrand = |x: &[f64]| {
        let f = norm(&dist.f_pm(x));
        if f == 0.0 {
            0.0
        } else {
            a * dist.density(x) * f.powi(d as i32 - 1)
        }
    };
    let integral = integrate_box(integrand, region.lower(), region.upper(), CubatureOptions::default())?.value;
    let (vol, err) = image_volume(
        region,
        |x| dist.f_pm(x),
        |y| dist.in_image_interior(y) && dist.q_pm(y).map(|x| region.contains(&x)).unwrap_or(false),
        budget,
        seed,
    )?;
    Ok(finish(integral, vol, err))
}

/// Compares `(1/a_d) ∫_B [p(Q(y))|y|^{d-1}]^{-1} dy` with `ℓ_d(Q(B) ∩ 𝒳)`.
pub fn restricted_ma_density_check(
    dist: &Distribution,
    region: &ConvexBox<f64>,
    budget: usize,
    seed: u64,
) -> Result<DensityCheck> {
    check_box_dim(dist, region)?;
    if region.contains_origin() || region.nearest_norm() <= 0.0 {
        return Err(domain!("region must stay away from the origin"));
    }
    if region.farthest_norm() >= 1.0 {
        return Err(domain!("region must lie inside the open unit ball"));
    }
    let d = dist.dim();
    let a = surface_constant(d);
    let integrand = |y: &[f64]| {
        let x = dist.q_pm(y).expect("inside the ball");
        let p = dist.density(&x);
        if p > 0.0 {
            1.0 / (a * p * norm(y).powi(d as i32 - 1))
        } else {
            0.0
        }
    };
    let integral = integrate_box(integrand, region.lower(), region.upper(), CubatureOptions::default())?.value;
    let (vol, err) = image_volume(
        region,
        |y| dist.q_pm(y).expect("inside the ball"),
        |x| dist.in_support_interior(x) && region.contains(&dist.f_pm(x)),
        budget,
        seed,
    )?;
    Ok(finish(integral, vol, err))
}

fn check_box_dim(dist: &Distribution, region: &ConvexBox<f64>) -> Result<()> {
    if region.dim() != dist.dim() {
        return Err(param!("region has dimension {}, distribution {}", region.dim(), dist.dim()));
    }
    Ok(())
}

fn finish(integral: f64, vol: f64, err: f64) -> DensityCheck {
    let discrepancy = (integral - vol).abs() / integral.abs().max(f64::MIN_POSITIVE);
    DensityCheck { integral, image_volume: vol, image_error: err, discrepancy, passed: discrepancy < DENSITY_TOLERANCE }
}

/// Volume of `map(region)`: bound the image by mapping a Halton cloud of the
/// region, pad the bounding box, and count uniform draws passing `member`.
fn image_volume(
    region: &ConvexBox<f64>,
    map: impl Fn(&[f64]) -> Vec<f64>,
    member: impl Fn(&[f64]) -> bool,
    budget: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if budget == 0 {
        return Err(param!("Monte-Carlo budget must be positive"));
    }
    let d = region.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let mut h = vec![0.0; d];
    let mut x = vec![0.0; d];
    let cloud = 4096 + (1 << (2 * d.min(5)));
    for i in 0..cloud as u64 {
        // include the corners so the hull of the cloud covers the box
        if i < (1u64 << d) {
            for k in 0..d {
                x[k] = if i >> k & 1 == 1 { region.upper()[k] } else { region.lower()[k] };
            }
        } else {
            halton(i, &mut h);
            for k in 0..d {
                x[k] = region.lower()[k] + h[k] * (region.upper()[k] - region.lower()[k]);
            }
        }
        for (k, &y) in map(&x).iter().enumerate() {
            lo[k] = lo[k].min(y);
            hi[k] = hi[k].max(y);
        }
    }
    for k in 0..d {
        let pad = 0.1 * (hi[k] - lo[k]).max(1e-9);
        lo[k] -= pad;
        hi[k] += pad;
    }
    let bbox: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
    let mut rng = stream(seed);
    let mut hits = 0usize;
    let mut y = vec![0.0; d];
    for _ in 0..budget {
        for k in 0..d {
            y[k] = rng.random_range(lo[k]..hi[k]);
        }
        hits += member(&y) as usize;
    }
    let p = hits as f64 / budget as f64;
    Ok((p * bbox, bbox * (p * (1.0 - p) / budget as f64).sqrt()))
}

/// One-sample Kolmogorov–Smirnov distance against the CDF `cdf`.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let c = cdf(x);
        acc.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs())
    })
}
