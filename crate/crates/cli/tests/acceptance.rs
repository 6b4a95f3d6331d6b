//! Acceptance gates. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use center_outward::assignment::{solve, solve_slots, verify_pairwise_monotonicity};
use center_outward::experiments::{
    doubling_experiment, gc_experiment, scaled_ball_sup_gap, weak_convergence_experiment, DoublingParams, GcParams,
    WeakParams,
};
use center_outward::grid::{GridSpec, SphericalGrid};
use center_outward::measure::{ConvexBox, MassMethod, SphericalUniform, DEFAULT_MC_BUDGET};
use center_outward::oracles::{
    ma_density_check, restricted_ma_density_check, spherical_uniform_f, two_ball_f, Distribution,
};
use center_outward::points::PointSet;
use center_outward::potential::EmpiricalMap;
use center_outward::rng::{derive_seed, stream};
use itertools::Itertools;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t <= limit, format!("runtime {:.1?} exceeds {:?}", t, limit))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config_params<P: serde::de::DeserializeOwned>(name: &str) -> P {
    let text = std::fs::read_to_string(repo_root().join("configs").join(name)).expect("config present");
    let v: serde_json::Value = serde_json::from_str(&text).expect("config is JSON");
    serde_json::from_value(v["params"].clone()).expect("config params parse")
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Branch-stratified points with the expected image written out per branch.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(1);
    let mut checked = 0;
    let ud = Distribution::SphericalUniform { d: 2 };
    let tb = Distribution::TwoBall { d: 2 };
    for i in 0..1000 {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let w = [a.cos(), a.sin()];
        match i % 6 {
            0 => {
                let r = rng.random_range(0.0..1.0);
                let x = [r * w[0], r * w[1]];
                check(spherical_uniform_f(&x) == x.to_vec(), format!("inner branch at {x:?}"))?;
                if r > 1e-3 {
                    check(close(&ud.q_pm(&ud.f_pm(&x)).unwrap(), &x, 1e-12), "U_d inverse")?;
                }
            }
            1 => {
                let r = rng.random_range(1.0..50.0);
                let x = [r * w[0], r * w[1]];
                check(close(&spherical_uniform_f(&x), &w, 1e-12), format!("outer branch at {x:?}"))?;
            }
            2 => {
                // |x₁| ≥ 1 and |x − s e₁| ≤ 1
                let r = rng.random_range(0.0..1.0);
                let s = if i % 12 < 6 { 1.0 } else { -1.0 };
                let y = [s * (r * w[0]).abs(), r * w[1]];
                let x = [y[0] + s, y[1]];
                check(close(&two_ball_f(&x), &y, 1e-12), format!("shifted-ball branch at {x:?}"))?;
                if tb.median_set_distance(&x) > 1e-3 && tb.in_support_interior(&x) {
                    check(close(&tb.q_pm(&tb.f_pm(&x)).unwrap(), &x, 1e-12), "two-ball inverse")?;
                }
            }
            3 => {
                let r = rng.random_range(1.0..20.0);
                let s = if i % 12 < 6 { 1.0 } else { -1.0 };
                let y = [s * (r * w[0]).abs(), r * w[1]];
                let x = [y[0] + s, y[1]];
                let expect = [y[0] / r, y[1] / r];
                check(close(&two_ball_f(&x), &expect, 1e-12), format!("projected branch at {x:?}"))?;
            }
            4 => {
                let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                check(two_ball_f(&x) == vec![0.0, x[1]], format!("slab branch at {x:?}"))?;
            }
            _ => {
                let t: f64 = rng.random_range(1.0..20.0);
                let x = [rng.random_range(-1.0..1.0), if i % 2 == 0 { t } else { -t }];
                check(close(&two_ball_f(&x), &[0.0, x[1].signum()], 1e-12), format!("slab projection at {x:?}"))?;
            }
        }
        checked += 1;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{checked} branch-stratified points, inverses to 1e-12"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let u = SphericalUniform::<f64>::new(2).unwrap();
    let n = 100_000;
    let draws = u.sample(n, 2);
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let r = k as f64 / 10.0;
        check(u.ball_mass(r).unwrap() == r, format!("ball_mass({r}) != {r}"))?;
        let hits = draws.rows().filter(|x| norm(x) <= r).count() as f64 / n as f64;
        let sigma = (r * (1.0 - r) / n as f64).sqrt();
        let z = (hits - r).abs() / sigma;
        worst = worst.max(z);
        check(z <= 3.0, format!("r = {r}: Monte-Carlo fraction {hits} is {z:.2} sigma off"))?;
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("exact masses; worst Monte-Carlo deviation {worst:.2} sigma"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (file, d) in [("doubling_d3.json", 3), ("doubling_d2.json", 2)] {
        let p: DoublingParams = config_params(file);
        let rep = doubling_experiment(&p).map_err(|e| e.to_string())?;
        check(rep.passed(), format!("d = {d}: {:?}", rep.predicates))?;
        // Monte-Carlo cross-check at the stated budget
        let u = SphericalUniform::<f64>::new(d).unwrap();
        for (i, rec) in rep.records.iter().enumerate() {
            let mc = u
                .doubling_ratio(rec.r, MassMethod::MonteCarlo, DEFAULT_MC_BUDGET, derive_seed(33, &[d as u64, i as u64]))
                .map_err(|e| e.to_string())?;
            check(
                (mc.ratio - rec.ratio).abs() <= mc.error + rec.error,
                format!("d = {d}, r = {}: Monte-Carlo ratio {} vs quadrature {}", rec.r, mc.ratio, rec.ratio),
            )?;
        }
        notes.push(format!("d={d} spread {}", rep.predicates[0].detail));
    }
    within(start, Duration::from_secs(120))?;
    Ok(notes.join(", "))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(4);
    for trial in 0..200 {
        let d = 2 + trial % 2;
        let n = 1 + trial % 8;
        let sample = PointSet::from_flat(d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let slots = PointSet::from_flat(d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let cost = |p: &[usize]| -> f64 {
            p.iter()
                .enumerate()
                .map(|(i, &j)| sample.row(i).iter().zip(slots.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum()
        };
        let best = (0..n).permutations(n).map(|p| cost(&p)).fold(f64::INFINITY, f64::min);
        let r = solve_slots(&sample, &slots).map_err(|e| e.to_string())?;
        check(cost(&r.sigma) == best, format!("instance {trial}: {} vs brute force {best}", cost(&r.sigma)))?;
    }
    let mut pairs = 0;
    for (k, n) in (10..=50).step_by(10).enumerate() {
        let spec = GridSpec::for_sample_size(2 + k % 2, n, Some(k as u64)).unwrap();
        let grid = SphericalGrid::<f64>::build(spec).unwrap();
        let sample = SphericalUniform::<f64>::new(spec.d).unwrap().sample(n, 40 + k as u64);
        let r = solve(&sample, &grid).map_err(|e| e.to_string())?;
        let m = verify_pairwise_monotonicity(&r, &sample, &grid.slots());
        check(m.passed, format!("n = {n}: 2-cycle slack {}", m.worst_slack))?;
        pairs += m.cycles_checked;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("200 brute-force instances exact; {pairs} transpositions monotone"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(5);
    let mut worst_mono = f64::INFINITY;
    let mut worst_norm: f64 = 0.0;
    for fit in 0..50 {
        let d = 2 + fit % 2;
        let n = rng.random_range(20..=500);
        let dist = match fit % 3 {
            0 => Distribution::SphericalUniform { d },
            1 => Distribution::TwoBall { d },
            _ => Distribution::ScaledBall { d, radius: 3.0 },
        };
        let seed = derive_seed(500, &[fit as u64]);
        let sample = dist.sample::<f64>(n, seed).unwrap();
        let grid = SphericalGrid::build(GridSpec::for_sample_size(d, n, Some(seed)).unwrap()).unwrap();
        let map = EmpiricalMap::fit(&sample, &grid, None).map_err(|e| e.to_string())?;
        let mut images = map.sample_images().unwrap().to_vecs();
        let mut slots = grid.slots().to_vecs();
        images.sort_by(|a, b| a.partial_cmp(b).unwrap());
        slots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        check(images == slots, format!("fit {fit}: image multiset differs from the grid"))?;
        check(map.is_strict(), format!("fit {fit}: map is not strict"))?;
        let mut x = vec![0.0; d];
        for p in 0..10_000 {
            let scale = if p % 10 == 0 { 1e6 } else { [0.5, 2.0, 10.0, 1e3][p % 4] };
            for c in x.iter_mut() {
                *c = rng.random_range(-1.0..1.0);
            }
            let r = norm(&x);
            let target = if p % 10 == 0 { scale } else { scale * r };
            x.iter_mut().for_each(|c| *c *= target / r);
            worst_norm = worst_norm.max(norm(&map.moreau_map(&x).unwrap()));
        }
        for _ in 0..1000 {
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
            let (fa, fb) = (map.moreau_map(&a).unwrap(), map.moreau_map(&b).unwrap());
            let s: f64 = (0..d).map(|k| (fa[k] - fb[k]) * (a[k] - b[k])).sum();
            worst_mono = worst_mono.min(s);
        }
    }
    check(worst_norm <= 1.0, format!("|F̂| reached {worst_norm}"))?;
    check(worst_mono >= -1e-10, format!("monotonicity slack {worst_mono}"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("50 fits exact; max |F̂| {worst_norm:.6}; min monotone slack {worst_mono:.3e}"))
}

fn random_box(rng: &mut impl Rng, d: usize, lo: f64, hi: f64, accept: impl Fn(&ConvexBox<f64>) -> bool) -> ConvexBox<f64> {
    loop {
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..0.3)).collect();
        let b = ConvexBox::new(a.clone(), a.iter().zip(&w).map(|(x, y)| x + y).collect()).unwrap();
        if accept(&b) {
            return b;
        }
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(6);
    let mut worst: f64 = 0.0;
    let budget = 400_000;
    for (k, dist) in [Distribution::SphericalUniform { d: 2 }, Distribution::ScaledBall { d: 2, radius: 2.0 }]
        .into_iter()
        .enumerate()
    {
        let radius = if k == 0 { 1.0 } else { 2.0 };
        for i in 0..10 {
            let region = random_box(&mut rng, 2, -radius, radius, |b| b.farthest_norm() < 0.95 * radius);
            let c = ma_density_check(&dist, &region, budget, derive_seed(60, &[k as u64, i]))
                .map_err(|e| e.to_string())?;
            check(c.passed, format!("{dist:?} region {region:?}: {c:?}"))?;
            worst = worst.max(c.discrepancy);
            let inner = random_box(&mut rng, 2, -0.9, 0.9, |b| b.farthest_norm() < 0.95 && b.nearest_norm() > 0.05);
            let c = restricted_ma_density_check(&dist, &inner, budget, derive_seed(61, &[k as u64, i]))
                .map_err(|e| e.to_string())?;
            check(c.passed, format!("{dist:?} region {inner:?}: {c:?}"))?;
            worst = worst.max(c.discrepancy);
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("40 checks, worst relative discrepancy {worst:.4}"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for file in ["gc_ud.json", "gc_two_ball.json"] {
        let p: GcParams = config_params(file);
        let rep = gc_experiment(&p).map_err(|e| e.to_string())?;
        let failed: Vec<_> = rep.predicates.iter().filter(|p| !p.passed).collect();
        check(failed.is_empty(), format!("{file}: {failed:?}"))?;
        let med: Vec<String> = rep.summary.iter().map(|s| format!("{:.3}", s.sup_error_f.median)).collect();
        notes.push(format!("{} F medians [{}]", p.dist.label(), med.join(", ")));
    }
    within(start, Duration::from_secs(15 * 60))?;
    Ok(notes.join("; "))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let p: WeakParams = config_params("weak_scaled.json");
    let rep = weak_convergence_experiment(&p).map_err(|e| e.to_string())?;
    let tol = 2.0 * p.scope.resolution();
    for r in &rep.records {
        let want = scaled_ball_sup_gap(r.n_or_m);
        check((r.sup_error_f - want).abs() <= tol, format!("m = {}: {} vs {}", r.n_or_m, r.sup_error_f, want))?;
    }
    check(rep.passed(), format!("{:?}", rep.predicates))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("m in {:?} match (1/m)/(1+1/m) within {tol:e}", p.m_list))
}

struct Run {
    code: Option<i32>,
    stdout: Vec<u8>,
    files: Vec<(String, Vec<u8>)>,
}

/// Runs the CLI in a fresh directory and collects everything it wrote.
fn run_cli(args: &[&str], inputs: &[(&str, &str)]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in inputs {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    let out = Command::new(env!("CARGO_BIN_EXE_center-outward")).args(args).current_dir(dir.path()).output().unwrap();
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Run { code: out.status.code(), stdout: out.stdout, files }
}

fn criterion_9() -> Outcome {
    let sample_csv = "0.1,0.2\n-0.3,0.05\n0.4,-0.4\n-0.1,-0.6\n0.7,0.1\n-0.5,0.5\n0.05,0.8\n0.2,-0.1\n0.0,0.3\n";
    let fit = run_cli(&["fit", "--dist", "ud", "--dim", "2", "--nr", "2", "--ns", "4", "--seed", "3", "--out", "map.json"], &[]);
    let map = String::from_utf8(fit.files.iter().find(|f| f.0 == "map.json").expect("map written").1.clone()).unwrap();
    let doubling_cfg = std::fs::read_to_string(repo_root().join("configs/doubling_d3.json")).unwrap();
    let weak_cfg = std::fs::read_to_string(repo_root().join("configs/weak_scaled.json")).unwrap();
    let gc_cfg = r#"{"version":1,"experiment":"gc","params":{"dist":{"name":"spherical-uniform","d":2},"n_list":[30,60],"reps":2,"k":{"shape":"ball","center":[0,0],"radius":0.8},"m":null,"seed":9,"probe_count":1000,"min_factor":1.0}}"#;
    let queries = "0.1,0.1\n0.5,-0.2\n3.0,4.0\n";
    let cases: Vec<(&str, Vec<&str>, Vec<(&str, &str)>)> = vec![
        ("fit --dist", vec!["fit", "--dist", "ud", "--dim", "2", "--nr", "2", "--ns", "4", "--seed", "3", "--out", "map.json"], vec![]),
        ("fit --input", vec!["fit", "--input", "s.csv", "--nr", "2", "--ns", "4", "--n0", "1", "--out", "m.json"], vec![("s.csv", sample_csv)]),
        ("eval F", vec!["eval", "--map", "map.json", "--input", "q.csv", "--mode", "F"], vec![("map.json", &map), ("q.csv", queries)]),
        ("eval Q", vec!["eval", "--map", "map.json", "--input", "q.csv", "--mode", "Q", "--out", "q.out"], vec![("map.json", &map), ("q.csv", "0.1,0.1\n0.2,0.3\n")]),
        ("eval ranks", vec!["eval", "--map", "map.json", "--input", "q.csv", "--mode", "ranks"], vec![("map.json", &map), ("q.csv", queries)]),
        ("grid", vec!["grid", "--dim", "3", "--nr", "3", "--ns", "10", "--n0", "2", "--seed", "5"], vec![]),
        ("oracle F", vec!["oracle", "--dist", "two-ball", "--dim", "2", "--mode", "F", "--input", "q.csv"], vec![("q.csv", queries)]),
        ("oracle Q", vec!["oracle", "--dist", "scaled-ball:2", "--dim", "2", "--mode", "Q", "--input", "q.csv"], vec![("q.csv", "0.1,0.1\n")]),
        ("doubling", vec!["doubling", "--dim", "3", "--r", "0.08,0.04", "--method", "monte-carlo", "--budget", "100000", "--seed", "4"], vec![]),
        ("experiment doubling", vec!["experiment", "--config", "c.json", "--out", "rep"], vec![("c.json", &doubling_cfg)]),
        ("experiment weak", vec!["experiment", "--config", "c.json", "--out", "rep"], vec![("c.json", &weak_cfg)]),
        ("experiment gc", vec!["experiment", "--config", "c.json", "--out", "rep"], vec![("c.json", gc_cfg)]),
    ];
    for (name, args, inputs) in &cases {
        let a = run_cli(args, inputs);
        let b = run_cli(args, inputs);
        check(a.code == Some(0), format!("{name}: exit code {:?}", a.code))?;
        check(a.stdout == b.stdout, format!("{name}: stdout differs between runs"))?;
        check(a.files == b.files, format!("{name}: output files differ between runs"))?;
    }
    Ok(format!("{} commands byte-identical across reruns", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form oracle fidelity", criterion_1),
        ("ball-mass identity", criterion_2),
        ("non-doubling of U_d", criterion_3),
        ("assignment exactness", criterion_4),
        ("empirical interpolation contract", criterion_5),
        ("Monge-Ampere identities", criterion_6),
        ("Glivenko-Cantelli on compacts", criterion_7),
        ("weak-convergence stability", criterion_8),
        ("CLI determinism", criterion_9),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        match f() {
            Ok(detail) => println!("PASS criterion {} ({name}) [{:.1?}]: {detail}", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{:.1?}]: {why}", i + 1, t.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
