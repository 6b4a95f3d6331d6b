use std::path::{Path, PathBuf};
use std::process::ExitCode;

use center_outward::experiments::{doubling_experiment, gc_experiment, weak_convergence_experiment, ExperimentReport};
use center_outward::grid::GridSpec;
use center_outward::measure::{MassMethod, DEFAULT_MC_BUDGET};
use center_outward::oracles::Distribution;
use center_outward::rng::derive_seed;
use center_outward::{assignment, EmpiricalMapF64, PointSetF64, SphericalGridF64, SphericalUniformF64};
use clap::{Parser, Subcommand, ValueEnum};

mod config;
mod error;
mod table;

use config::{parse_experiment, Experiment, Outputs};
use error::{CliError, CliResult, EXIT_PREDICATE, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "center-outward", version, about = "Empirical center-outward maps, ranks and signs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct GridArgs {
    /// Number of rings.
    #[arg(long)]
    nr: Option<usize>,
    /// Directions per ring.
    #[arg(long)]
    ns: Option<usize>,
    /// Copies of the origin.
    #[arg(long)]
    n0: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an empirical map to a CSV sample or to draws from a named law.
    Fit {
        #[arg(long, conflicts_with = "dist")]
        input: Option<PathBuf>,
        /// `ud`, `two-ball` or `scaled-ball:R`.
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        /// Sample size when drawing from `--dist`.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a fitted map at the points of a CSV file.
    Eval {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: EvalMode,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a spherical grid and write it as JSON.
    Grid {
        #[arg(long)]
        dim: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Rotation seed; omit for the unrotated grid.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix; writes `<out>.csv` and `<out>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form population maps at the points of a CSV file.
    Oracle {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Doubling ratios of U_d on the thin boxes S_r.
    Doubling {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long, value_enum, default_value = "quadrature")]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_MC_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    #[value(name = "F")]
    F,
    #[value(name = "Q")]
    Q,
    Ranks,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    #[value(name = "F")]
    F,
    #[value(name = "Q")]
    Q,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Quadrature,
    MonteCarlo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn grid_spec(d: usize, n: Option<usize>, g: &GridArgs, rotation: Option<u64>) -> CliResult<GridSpec> {
    match (g.nr, g.ns) {
        (Some(nr), Some(ns)) => Ok(GridSpec::new(d, nr, ns, g.n0.unwrap_or(0), rotation)),
        (None, None) if g.n0.is_none() => {
            let n = n.ok_or_else(|| CliError::Usage("give --nr and --ns, or a sample size".into()))?;
            Ok(GridSpec::for_sample_size(d, n, rotation)?)
        }
        _ => Err(CliError::Usage("--nr and --ns must be given together".into())),
    }
}

fn run(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Fit { input, dist, dim, n, grid, epsilon, seed, header, out } => {
            let sample: PointSetF64 = match (&input, &dist) {
                (Some(path), None) => table::read_points(path, header, dim)?,
                (None, Some(name)) => {
                    let d = dim.ok_or_else(|| CliError::Usage("--dist needs --dim".into()))?;
                    let seed = seed.ok_or_else(|| CliError::Usage("drawing a sample needs --seed".into()))?;
                    let size = match (n, grid.nr, grid.ns) {
                        (Some(n), _, _) => n,
                        (None, Some(nr), Some(ns)) => nr * ns + grid.n0.unwrap_or(0),
                        _ => return Err(CliError::Usage("--dist needs --n or --nr/--ns".into())),
                    };
                    Distribution::parse(name, d)?.sample(size, derive_seed(seed, &[0]))?
                }
                _ => return Err(CliError::Usage("give exactly one of --input and --dist".into())),
            };
            let rotation = seed.map(|s| derive_seed(s, &[1]));
            let spec = grid_spec(sample.dim(), Some(sample.len()), &grid, rotation)?;
            if spec.n() != sample.len() {
                return Err(CliError::Validation(format!(
                    "sample has {} points but the grid has {} slots",
                    sample.len(),
                    spec.n()
                )));
            }
            let g = SphericalGridF64::build(spec)?;
            let result = assignment::solve(&sample, &g)?;
            let map = EmpiricalMapF64::from_assignment(&sample, &g, &result, epsilon)?;
            write_output(Some(&out), &to_json(&map))?;
            println!("assignment_cost={}", table::fmt(result.total_cost));
            println!("epsilon={}", table::fmt(map.epsilon()));
            println!("strict={}", map.is_strict());
            Ok(0)
        }
        Command::Eval { map, input, mode, header, out } => {
            let text = std::fs::read_to_string(&map).map_err(|e| CliError::read(&map, e))?;
            let m: EmpiricalMapF64 = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: invalid map: {e}", map.display())))?;
            let pts = table::read_points(&input, header, Some(m.dim()))?;
            let mut s = String::new();
            let mut failures = 0usize;
            match mode {
                EvalMode::F => {
                    for x in pts.rows() {
                        s.push_str(&table::format_row(&m.moreau_map(x)?));
                        s.push('\n');
                    }
                }
                EvalMode::Q => {
                    for (i, u) in pts.rows().enumerate() {
                        match m.empirical_quantile(u) {
                            Ok(x) => s.push_str(&table::format_row(&x)),
                            Err(e) => {
                                failures += 1;
                                eprintln!("row {}: {e}", i + 1 + header as usize);
                                s.push_str(&vec!["NaN"; m.dim()].join(","));
                            }
                        }
                        s.push('\n');
                    }
                }
                EvalMode::Ranks => {
                    // training points get their exact ring radius; other points |F̂(x)|
                    let rs = m.ranks_and_signs();
                    for x in pts.rows() {
                        let row = match m.sample().rows().position(|y| y == x) {
                            Some(i) => std::iter::once(rs[i].rank).chain(rs[i].sign.iter().copied()).collect(),
                            None => {
                                let f = m.moreau_map(x)?;
                                let r = f.iter().map(|c| c * c).sum::<f64>().sqrt();
                                let sign = f.iter().map(|&c| if r > 0.0 { c / r } else { 0.0 });
                                std::iter::once(r).chain(sign).collect::<Vec<_>>()
                            }
                        };
                        s.push_str(&table::format_row(&row));
                        s.push('\n');
                    }
                }
            }
            write_output(out.as_deref(), &s)?;
            Ok(if failures > 0 { EXIT_VALIDATION } else { 0 })
        }
        Command::Grid { dim, grid, seed, out } => {
            let spec = grid_spec(dim, None, &grid, seed)?;
            let g = SphericalGridF64::build(spec)?;
            write_output(out.as_deref(), &to_json(&g))?;
            Ok(0)
        }
        Command::Experiment { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::read(&config, e))?;
            run_experiment(parse_experiment(&text)?, out)
        }
        Command::Oracle { dist, dim, mode, input, header, out } => {
            let dist = Distribution::parse(&dist, dim)?;
            let pts = table::read_points(&input, header, Some(dim))?;
            let mut s = String::new();
            for x in pts.rows() {
                let y = match mode {
                    OracleMode::F => dist.f_pm(x),
                    OracleMode::Q => dist.q_pm(x)?,
                };
                s.push_str(&table::format_row(&y));
                s.push('\n');
            }
            write_output(out.as_deref(), &s)?;
            Ok(0)
        }
        Command::Doubling { dim, r, method, budget, seed, out } => {
            let u = SphericalUniformF64::new(dim)?;
            let method = match method {
                Method::Quadrature => MassMethod::Quadrature,
                Method::MonteCarlo => MassMethod::MonteCarlo,
            };
            let mut s = String::from("r,ratio,ratio_times_r,error\n");
            for (i, &r) in r.iter().enumerate() {
                let e = u.doubling_ratio(r, method, budget, derive_seed(seed, &[i as u64]))?;
                s.push_str(&table::format_row(&[r, e.ratio, e.ratio * r, e.error]));
                s.push('\n');
            }
            write_output(out.as_deref(), &s)?;
            Ok(0)
        }
    }
}

fn outputs_for(outputs: &Outputs, prefix: Option<PathBuf>) -> (Option<PathBuf>, Option<PathBuf>) {
    match prefix {
        Some(p) => {
            let mut csv = p.clone().into_os_string();
            csv.push(".csv");
            let mut json = p.into_os_string();
            json.push(".json");
            (Some(csv.into()), Some(json.into()))
        }
        None => (outputs.csv.clone(), outputs.summary.clone()),
    }
}

fn emit_report(report: &ExperimentReport, outputs: &Outputs, prefix: Option<PathBuf>) -> CliResult<i32> {
    let (csv, json) = outputs_for(outputs, prefix);
    write_output(csv.as_deref(), &report.to_csv())?;
    if let Some(j) = json {
        write_output(Some(&j), &to_json(report))?;
    }
    for p in &report.predicates {
        eprintln!("{} {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail);
    }
    Ok(if report.passed() { 0 } else { EXIT_PREDICATE })
}

fn run_experiment(exp: Experiment, prefix: Option<PathBuf>) -> CliResult<i32> {
    match exp {
        Experiment::Gc(cfg) => emit_report(&gc_experiment(&cfg.params)?, &cfg.outputs, prefix),
        Experiment::Weak(cfg) => emit_report(&weak_convergence_experiment(&cfg.params)?, &cfg.outputs, prefix),
        Experiment::Doubling(cfg) => {
            let report = doubling_experiment(&cfg.params)?;
            let (csv, json) = outputs_for(&cfg.outputs, prefix);
            write_output(csv.as_deref(), &report.to_csv(cfg.params.d))?;
            if let Some(j) = json {
                write_output(Some(&j), &to_json(&report))?;
            }
            for p in &report.predicates {
                eprintln!("{} {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail);
            }
            Ok(if report.passed() { 0 } else { EXIT_PREDICATE })
        }
    }
}
