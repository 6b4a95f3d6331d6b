//! Desk-scale convergence experiments: Glivenko–Cantelli on compacts,
//! sup-norm stability along a weakly convergent family, and the doubling
//! probe. Every replication derives its own seed from the master seed, so
//! reports do not depend on scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::error::{domain, param, Result};
use crate::grid::{GridSpec, SphericalGrid};
use crate::measure::{MassMethod, SphericalUniform};
use crate::oracles::Distribution;
use crate::points::PointSet;
use crate::potential::EmpiricalMap;
use crate::rng::{derive_seed, halton, stream, unit_direction};
use crate::scalar::dist;

pub const MIN_PROBES: usize = 1000;

/// Compact probe region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompactSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl CompactSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } | Self::Annulus { center, .. } => center.len(),
            Self::Box { lower, .. } => lower.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Ball { center, radius } => !center.is_empty() && *radius > 0.0,
            Self::Annulus { center, inner, outer } => !center.is_empty() && *inner >= 0.0 && inner < outer,
            Self::Box { lower, upper } => {
                !lower.is_empty() && lower.len() == upper.len() && lower.iter().zip(upper).all(|(a, b)| a < b)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(param!("malformed compact {:?}", self))
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Ball { center, radius } => dist(x, center) <= *radius,
            Self::Annulus { center, inner, outer } => {
                let r = dist(x, center);
                r >= *inner && r <= *outer
            }
            Self::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| v >= a && v <= b),
        }
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Ball { center, radius: r } | Self::Annulus { center, outer: r, .. } => {
                (center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())
            }
            Self::Box { lower, upper } => (lower.clone(), upper.clone()),
        }
    }

    /// The first `count` Halton points of the bounding box that fall in the compact.
    pub fn probes(&self, count: usize) -> Result<PointSet<f64>> {
        self.validate()?;
        let d = self.dim();
        let (lo, hi) = self.bounding_box();
        let mut out = PointSet::with_capacity(d, count);
        let mut h = vec![0.0; d];
        let mut x = vec![0.0; d];
        let mut index = 1u64;
        let cap = 1000 * count as u64 + 1000;
        while out.len() < count {
            if index > cap {
                return Err(param!("compact {:?} is too thin to probe", self));
            }
            halton(index, &mut h);
            index += 1;
            for k in 0..d {
                x[k] = lo[k] + h[k] * (hi[k] - lo[k]);
            }
            if self.contains(&x) {
                out.push(&x);
            }
        }
        Ok(out)
    }

    /// Points on the boundary of the compact (deterministic).
    pub fn boundary_probes(&self, count: usize) -> PointSet<f64> {
        let d = self.dim();
        let mut out = PointSet::with_capacity(d, count);
        let mut rng = stream(0x0b0d_a21e);
        let mut dir = vec![0.0; d];
        match self {
            Self::Ball { center, radius } => {
                for _ in 0..count {
                    unit_direction(&mut rng, &mut dir);
                    let p: Vec<f64> = center.iter().zip(&dir).map(|(c, u)| c + radius * u).collect();
                    out.push(&p);
                }
            }
            Self::Annulus { center, inner, outer } => {
                for i in 0..count {
                    unit_direction(&mut rng, &mut dir);
                    let r = if i % 2 == 0 { *outer } else { *inner };
                    let p: Vec<f64> = center.iter().zip(&dir).map(|(c, u)| c + r * u).collect();
                    out.push(&p);
                }
            }
            Self::Box { lower, upper } => {
                let mut h = vec![0.0; d];
                for mask in 0..(1usize << d) {
                    let p: Vec<f64> = (0..d).map(|k| if mask >> k & 1 == 1 { upper[k] } else { lower[k] }).collect();
                    out.push(&p);
                }
                for i in 0..count {
                    halton(i as u64 + 1, &mut h);
                    let mut p: Vec<f64> = (0..d).map(|k| lower[k] + h[k] * (upper[k] - lower[k])).collect();
                    let face = i % (2 * d);
                    p[face / 2] = if face % 2 == 0 { lower[face / 2] } else { upper[face / 2] };
                    out.push(&p);
                }
            }
        }
        out
    }

    /// Domain error unless every boundary and interior probe passes `inside`.
    pub fn check_inside(&self, inside: impl Fn(&[f64]) -> bool, what: &str) -> Result<()> {
        self.validate()?;
        let interior = self.probes(MIN_PROBES)?;
        let boundary = self.boundary_probes(4 * MIN_PROBES);
        if interior.rows().chain(boundary.rows()).all(&inside) {
            Ok(())
        } else {
            Err(domain!("compact {:?} is not contained in {}", self, what))
        }
    }
}

/// `max_{x ∈ probes(K)} |map(x) − oracle(x)|`.
pub fn sup_error_on_compact(
    map_eval: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    oracle_eval: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    k: &CompactSpec,
    probe_count: usize,
) -> Result<f64> {
    if probe_count < MIN_PROBES {
        return Err(param!("need at least {} probes, got {}", MIN_PROBES, probe_count));
    }
    sup_error_on(&map_eval, &oracle_eval, &k.probes(probe_count)?)
}

fn sup_error_on(
    map_eval: &(impl Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    oracle_eval: &(impl Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    probes: &PointSet<f64>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in probes.rows() {
        worst = worst.max(dist(&map_eval(x)?, &oracle_eval(x)?));
    }
    Ok(worst)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupErrorRecord {
    pub experiment: String,
    pub d: usize,
    pub n_or_m: usize,
    pub rep: usize,
    pub seed: u64,
    pub sup_error_f: f64,
    pub sup_error_q: Option<f64>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut data = Data::new(values.to_vec());
        Self { q1: data.lower_quartile(), median: data.median(), q3: data.upper_quartile() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n_or_m: usize,
    pub reps: usize,
    pub sup_error_f: Quartiles,
    pub sup_error_q: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub records: Vec<SupErrorRecord>,
    pub summary: Vec<GroupSummary>,
    pub predicates: Vec<Predicate>,
    pub runtime_ms: f64,
}

pub const CSV_HEADER: &str = "experiment,d,n_or_m,rep,seed,sup_error_F,sup_error_Q,runtime_ms";

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.predicates.iter().all(|p| p.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let q = r.sup_error_q.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.experiment,
                r.d,
                r.n_or_m,
                r.rep,
                r.seed,
                fmt_f64(r.sup_error_f),
                q,
                fmt_f64(r.runtime_ms)
            );
        }
        s
    }
}

fn elapsed_ms(t: Instant, timing: bool) -> f64 {
    if timing {
        t.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn median_predicates(label: &str, medians: &[f64], min_factor: f64) -> Vec<Predicate> {
    let mut out = vec![Predicate {
        name: format!("{label} medians strictly decreasing"),
        passed: strictly_decreasing(medians),
        detail: format!("{:?}", medians),
    }];
    if let (Some(&first), Some(&last)) = (medians.first(), medians.last()) {
        let factor = first / last;
        out.push(Predicate {
            name: format!("{label} first/last median factor >= {min_factor}"),
            passed: factor >= min_factor,
            detail: format!("{factor}"),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcParams {
    pub dist: Distribution,
    pub n_list: Vec<usize>,
    pub reps: usize,
    /// Compact of the support interior on which `F̂` is compared.
    pub k: CompactSpec,
    /// Compact of `F(𝒳) \ {0}` on which `Q̂` is compared.
    pub m: Option<CompactSpec>,
    pub seed: u64,
    pub probe_count: usize,
    pub min_factor: f64,
    #[serde(default)]
    pub timing: bool,
}

/// Sup-errors of one fitted replication.
pub fn gc_replication(p: &GcParams, n: usize, seed: u64) -> Result<(f64, Option<f64>)> {
    let d = p.dist.dim();
    let sample = p.dist.sample::<f64>(n, derive_seed(seed, &[0]))?;
    let grid = SphericalGrid::build(GridSpec::for_sample_size(d, n, Some(derive_seed(seed, &[1])))?)?;
    let map = EmpiricalMap::fit(&sample, &grid, None)?;
    let f = sup_error_on_compact(|x| map.moreau_map(x), |x| Ok(p.dist.f_pm(x)), &p.k, p.probe_count)?;
    let q = match &p.m {
        Some(m) => Some(sup_error_on_compact(|u| map.empirical_quantile(u), |u| p.dist.q_pm(u), m, p.probe_count)?),
        None => None,
    };
    Ok((f, q))
}

pub fn gc_experiment(p: &GcParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    let d = p.dist.dim();
    if p.n_list.is_empty() || p.reps == 0 || p.n_list.iter().any(|&n| n == 0) {
        return Err(param!("n_list and reps must be non-empty and positive"));
    }
    if p.k.dim() != d || p.m.as_ref().is_some_and(|m| m.dim() != d) {
        return Err(param!("compacts must have dimension {}", d));
    }
    p.k.check_inside(|x| p.dist.in_support_interior(x), "the support interior")?;
    if let Some(m) = &p.m {
        m.check_inside(|u| p.dist.in_image_interior(u), "the punctured image of the support")?;
    }
    let jobs: Vec<(usize, usize, u64)> = p
        .n_list
        .iter()
        .flat_map(|&n| (0..p.reps).map(move |rep| (n, rep, derive_seed(p.seed, &[n as u64, rep as u64]))))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(n, rep, seed)| {
            let t = Instant::now();
            let (f, q) = gc_replication(p, n, seed)?;
            Ok(SupErrorRecord {
                experiment: "gc".into(),
                d,
                n_or_m: n,
                rep,
                seed,
                sup_error_f: f,
                sup_error_q: q,
                runtime_ms: elapsed_ms(t, p.timing),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary: Vec<GroupSummary> = p
        .n_list
        .iter()
        .map(|&n| {
            let group: Vec<&SupErrorRecord> = records.iter().filter(|r| r.n_or_m == n).collect();
            let f: Vec<f64> = group.iter().map(|r| r.sup_error_f).collect();
            let q: Option<Vec<f64>> = group.iter().map(|r| r.sup_error_q).collect();
            GroupSummary { n_or_m: n, reps: group.len(), sup_error_f: Quartiles::of(&f), sup_error_q: q.map(|q| Quartiles::of(&q)) }
        })
        .collect();
    let mf: Vec<f64> = summary.iter().map(|s| s.sup_error_f.median).collect();
    let mut predicates = median_predicates("F", &mf, p.min_factor);
    if p.m.is_some() {
        let mq: Vec<f64> = summary.iter().filter_map(|s| s.sup_error_q.map(|q| q.median)).collect();
        predicates.extend(median_predicates("Q", &mq, p.min_factor));
    }
    predicates.push(Predicate {
        name: "errors finite and non-negative".into(),
        passed: records.iter().all(|r| {
            r.sup_error_f.is_finite() && r.sup_error_f >= 0.0 && r.sup_error_q.is_none_or(|q| q.is_finite() && q >= 0.0)
        }),
        detail: String::new(),
    });
    Ok(ExperimentReport {
        experiment: "gc".into(),
        config: serde_json::to_value(p).expect("params serialize"),
        seeds: jobs.iter().map(|j| j.2).collect(),
        records,
        summary,
        predicates,
        runtime_ms: elapsed_ms(start, p.timing),
    })
}

/// Sequence `m ↦ P_m` of laws with closed-form maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeakFamily {
    /// `P_m = law of (1 + 1/m)·U`.
    ScaledBall { d: usize },
    /// `P_m = dist` for every `m`.
    Constant { dist: Distribution },
}

impl WeakFamily {
    pub fn member(&self, m: usize) -> Result<Distribution> {
        match *self {
            Self::ScaledBall { d } => {
                if m == 0 {
                    return Err(param!("family index must be positive"));
                }
                Ok(Distribution::ScaledBall { d, radius: 1.0 + 1.0 / m as f64 })
            }
            Self::Constant { dist } => Ok(dist),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ScaledBall { d } => *d,
            Self::Constant { dist } => dist.dim(),
        }
    }
}

/// `sup_x |F_{R}(x) − F_1(x)|` with `R = 1 + 1/m`, attained at `|x| = 1`.
pub fn scaled_ball_sup_gap(m: usize) -> f64 {
    let h = 1.0 / m as f64;
    h / (1.0 + h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalScope {
    /// Radial lines out to `radius` with spacing `step`, plus far points.
    Global { radius: f64, step: f64, directions: usize, far_points: usize, far_radius: f64 },
    Compacts { compacts: Vec<CompactSpec>, probe_count: usize },
}

impl EvalScope {
    pub fn default_global() -> Self {
        Self::Global { radius: 10.0, step: 1e-3, directions: 16, far_points: 1000, far_radius: 1e6 }
    }

    /// Probe resolution used in the tolerance of the analytic check.
    pub fn resolution(&self) -> f64 {
        match self {
            Self::Global { step, .. } => *step,
            Self::Compacts { .. } => 0.0,
        }
    }

    pub fn probes(&self, d: usize, seed: u64) -> Result<PointSet<f64>> {
        match self {
            Self::Global { radius, step, directions, far_points, far_radius } => {
                if !(*step > 0.0 && *radius > 0.0 && *directions > 0 && *far_radius >= *radius) {
                    return Err(param!("invalid global scope"));
                }
                let dirs = radial_directions(d, *directions, seed);
                let steps = (radius / step).round() as usize;
                let mut out = PointSet::with_capacity(d, dirs.len() * (steps + 1) + far_points);
                for w in dirs.rows() {
                    for k in 0..=steps {
                        let r = k as f64 * step;
                        out.push(&w.iter().map(|c| c * r).collect::<Vec<_>>());
                    }
                }
                let mut rng = stream(derive_seed(seed, &[1]));
                let mut w = vec![0.0; d];
                let span = (far_radius / radius).ln();
                for i in 0..*far_points {
                    unit_direction(&mut rng, &mut w);
                    let t = if *far_points > 1 { i as f64 / (*far_points - 1) as f64 } else { 1.0 };
                    let r = radius * (span * t).exp();
                    out.push(&w.iter().map(|c| c * r).collect::<Vec<_>>());
                }
                Ok(out)
            }
            Self::Compacts { compacts, probe_count } => {
                if *probe_count < MIN_PROBES || compacts.is_empty() {
                    return Err(param!("compacts scope needs compacts and at least {} probes each", MIN_PROBES));
                }
                let mut out = PointSet::new(d);
                for k in compacts {
                    if k.dim() != d {
                        return Err(param!("compact dimension mismatch"));
                    }
                    for x in k.probes(*probe_count)?.rows() {
                        out.push(x);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Coordinate axes both ways, then seeded draws, `count` in total.
fn radial_directions(d: usize, count: usize, seed: u64) -> PointSet<f64> {
    let mut out = PointSet::with_capacity(d, count);
    let mut w = vec![0.0; d];
    for i in 0..count.min(2 * d) {
        w.iter_mut().for_each(|c| *c = 0.0);
        w[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
        out.push(&w);
    }
    let mut rng = stream(seed);
    while out.len() < count {
        unit_direction(&mut rng, &mut w);
        out.push(&w);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakParams {
    pub family: WeakFamily,
    pub target: Distribution,
    pub m_list: Vec<usize>,
    pub scope: EvalScope,
    pub seed: u64,
    #[serde(default)]
    pub timing: bool,
}

pub fn weak_convergence_experiment(p: &WeakParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    let d = p.target.dim();
    if p.family.dim() != d || p.m_list.is_empty() {
        return Err(param!("family and target must share a dimension and m_list must be non-empty"));
    }
    let probes = p.scope.probes(d, p.seed)?;
    let records = p
        .m_list
        .iter()
        .map(|&m| {
            let t = Instant::now();
            let member = p.family.member(m)?;
            let sup = sup_error_on(&|x: &[f64]| Ok(member.f_pm(x)), &|x: &[f64]| Ok(p.target.f_pm(x)), &probes)?;
            Ok(SupErrorRecord {
                experiment: "weak".into(),
                d,
                n_or_m: m,
                rep: 0,
                seed: p.seed,
                sup_error_f: sup,
                sup_error_q: None,
                runtime_ms: elapsed_ms(t, p.timing),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = records
        .iter()
        .map(|r| GroupSummary { n_or_m: r.n_or_m, reps: 1, sup_error_f: Quartiles::of(&[r.sup_error_f]), sup_error_q: None })
        .collect();
    let sups: Vec<f64> = records.iter().map(|r| r.sup_error_f).collect();
    let mut predicates = Vec::new();
    match (p.family, p.target) {
        (WeakFamily::ScaledBall { .. }, Distribution::SphericalUniform { .. }) => {
            let tol = 2.0 * p.scope.resolution();
            let worst = records
                .iter()
                .map(|r| (r.sup_error_f - scaled_ball_sup_gap(r.n_or_m)).abs())
                .fold(0.0f64, f64::max);
            predicates.push(Predicate {
                name: "matches (1/m)/(1+1/m) within 2 probe steps".into(),
                passed: worst <= tol,
                detail: format!("worst deviation {worst:e}, tolerance {tol:e}"),
            });
        }
        (WeakFamily::Constant { dist }, target) if dist == target => {
            predicates.push(Predicate {
                name: "constant family gives zero".into(),
                passed: sups.iter().all(|&s| s == 0.0),
                detail: format!("{:?}", sups),
            });
        }
        _ => {}
    }
    let mut ordered: Vec<(usize, f64)> = records.iter().map(|r| (r.n_or_m, r.sup_error_f)).collect();
    ordered.sort_by_key(|a| a.0);
    predicates.push(Predicate {
        name: "non-increasing in m".into(),
        passed: ordered.windows(2).all(|w| w[1].1 <= w[0].1),
        detail: format!("{:?}", ordered),
    });
    Ok(ExperimentReport {
        experiment: "weak".into(),
        config: serde_json::to_value(p).expect("params serialize"),
        seeds: vec![p.seed],
        records,
        summary,
        predicates,
        runtime_ms: elapsed_ms(start, p.timing),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingParams {
    pub d: usize,
    pub r_list: Vec<f64>,
    pub method: MassMethod,
    pub budget: usize,
    pub seed: u64,
    /// Allowed max/min spread of `ratio·r` (d ≥ 3) or of `ratio` (d = 2).
    pub max_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingRecord {
    pub r: f64,
    pub ratio: f64,
    pub ratio_times_r: f64,
    pub error: f64,
    pub full_mass: f64,
    pub half_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub records: Vec<DoublingRecord>,
    pub predicates: Vec<Predicate>,
}

pub const DOUBLING_CSV_HEADER: &str = "experiment,d,r,ratio,ratio_times_r,error";

impl DoublingReport {
    pub fn passed(&self) -> bool {
        self.predicates.iter().all(|p| p.passed)
    }

    pub fn to_csv(&self, d: usize) -> String {
        let mut s = String::from(DOUBLING_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "doubling,{},{},{},{},{}",
                d,
                fmt_f64(r.r),
                fmt_f64(r.ratio),
                fmt_f64(r.ratio_times_r),
                fmt_f64(r.error)
            );
        }
        s
    }
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

pub fn doubling_experiment(p: &DoublingParams) -> Result<DoublingReport> {
    if p.r_list.is_empty() {
        return Err(param!("r_list must be non-empty"));
    }
    let u = SphericalUniform::<f64>::new(p.d)?;
    let records = p
        .r_list
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let e = u.doubling_ratio(r, p.method, p.budget, derive_seed(p.seed, &[i as u64]))?;
            Ok(DoublingRecord {
                r,
                ratio: e.ratio,
                ratio_times_r: e.ratio * r,
                error: e.error,
                full_mass: e.full.value,
                half_mass: e.half.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let predicate = if p.d >= 3 {
        let s = spread(&records.iter().map(|r| r.ratio_times_r).collect::<Vec<_>>());
        Predicate {
            name: format!("ratio*r spread <= {}", p.max_spread),
            passed: s <= p.max_spread,
            detail: format!("{s}"),
        }
    } else {
        let s = spread(&records.iter().map(|r| r.ratio).collect::<Vec<_>>());
        Predicate { name: format!("ratio spread < {}", p.max_spread), passed: s < p.max_spread, detail: format!("{s}") }
    };
    Ok(DoublingReport {
        experiment: "doubling".into(),
        config: serde_json::to_value(p).expect("params serialize"),
        records,
        predicates: vec![predicate],
    })
}

/// Twice the covering radius of the grid over `probes`: a bound on the
/// diameter of the grid cells meeting the probed region.
pub fn grid_cell_diameter(grid: &SphericalGrid<f64>, probes: &PointSet<f64>) -> f64 {
    let pts = grid.points();
    let cover = probes
        .rows()
        .map(|x| pts.rows().map(|u| dist(x, u)).fold(f64::INFINITY, f64::min))
        .fold(0.0f64, f64::max);
    2.0 * cover
}
