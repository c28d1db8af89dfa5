//! `msrelax` command-line entry point.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use msrelax::analysis::{
    barycenter_monitor, check_differential, check_eed, check_fuglede, check_improved_embedding, krummel_maggi_ratio,
    regime_fit, static_record, unit_centered,
};
use msrelax::config::RunConfig;
use msrelax::elliptic::{lambda, lambda_unreduced, legendre_residual, LatticeKernel};
use msrelax::evolution::{run_batch, RunStatus, TrajectoryLog};
use msrelax::geometry::{admissibility_report, enclosed_area, perimeter, random_star_shape, Domain};
use msrelax::output::{read_trajectory_csv, write_outputs};
use msrelax::potential::{
    difference_field, h_cell, h_minus_one_direct, h_minus_one_fft, solve_ms, trace_equality_disk, Kernel, Region,
};
use msrelax::sobolev::{curve_norm, interpolation_check, poincare_check, PeriodicSignal};
use msrelax::{build_cache, Error, RadialCurve};

/// Default trajectory for the `eed`, `diff`, `regime` and `bary` suites.
const DEFAULT_TRAJECTORY: &str = "R = 1\nN = 32\nmodes = 2, 8, 9, 10, 11, 12, 13, 14, 15\n\
    amps = 1e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4\n\
    phases = random\nseed = 1\nt_end = 0.3\nk_h = 5\n";

/// Grid edge above which `hminus` evaluates the direct oracle on a coarser grid.
const ORACLE_GRID: usize = 64;

#[derive(Parser)]
#[command(name = "msrelax", version, about = "Mullins-Sekerka relaxation of nearly circular curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow for one or more configs and write trajectory.csv and run.jsonl.
    Simulate {
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Overrides `out_dir` of every config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run verification suites; prints a JSON summary.
    Checks {
        #[arg(long, value_delimiter = ',', default_value = "fuglede")]
        suite: Vec<Suite>,
        /// Sample count of the randomized suites.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Trajectory config for `eed`, `diff`, `regime` and `bary`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Squared H^-1 distance between two curves, with the direct-sum oracle.
    Hminus {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Dump the periodic kernel on cell centers of [-L, L)^2 as CSV.
    PotentialTable {
        #[arg(long = "half-edge", default_value_t = 1.0)]
        half_edge: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geometric, energetic and Sobolev diagnostics of a curve file.
    Norms {
        curve: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.5, 0.5, 1.0])]
        orders: Vec<f64>,
    },
    /// Regime-fit table of a trajectory.csv.
    Report { trajectory: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Suite {
    Fuglede,
    Eed,
    Diff,
    Regime,
    Bary,
    Embed,
    Sobolev,
    Elliptic,
    Trace,
}

enum Failure {
    Usage(String),
    Hard(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Hard(e.to_string())
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> std::result::Result<RunConfig, Failure> {
    RunConfig::parse(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_curve(path: &Path) -> std::result::Result<RadialCurve, Failure> {
    RadialCurve::from_msrc(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn simulate(configs: &[PathBuf], out_dir: Option<&Path>) -> Outcome {
    let mut cfgs = Vec::new();
    for p in configs {
        let mut c = load_config(p)?;
        if let Some(d) = out_dir {
            c.out_dir = d.to_path_buf();
        }
        cfgs.push(c);
    }
    let mut ok = true;
    let mut summary = Vec::new();
    for (cfg, res) in cfgs.iter().zip(run_batch(&cfgs)) {
        let log = res?;
        write_outputs(&log, &cfg.out_dir, &cfg.trajectory, &cfg.events)?;
        ok &= !matches!(log.status, RunStatus::Halted(_));
        summary.push(json!({
            "config_hash": log.meta.config_hash,
            "status": log.status,
            "steps": log.steps,
            "rejections": log.rejections,
            "rows": log.rows.len(),
            "final_t": log.rows.last().map(|r| r.t),
            "final_E": log.rows.last().map(|r| r.e),
            "trajectory": cfg.out_dir.join(&cfg.trajectory),
        }));
    }
    print_json(&Value::Array(summary));
    Ok(ok)
}

fn fuglede_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<Value, Error> {
    let (mut tested, mut failures, mut misses, mut draws) = (0, 0, 0, 0);
    while tested < n {
        draws += 1;
        let (radius, k_max, fill) = (rng.gen_range(0.5..2.0), rng.gen_range(2..=16), rng.gen_range(0.2..0.9));
        let curve = random_star_shape(rng, radius, 64, k_max, 0.05, fill)?;
        if !admissibility_report(&unit_centered(&curve)?, 0.05)?.passed() {
            continue;
        }
        tested += 1;
        let rep = check_fuglede(&curve)?;
        misses += usize::from(!rep.hypotheses_ok);
        failures += usize::from(!rep.pass);
    }
    Ok(json!({ "pass": failures == 0 && misses == 0, "tested": tested, "draws": draws, "failures": failures, "hypothesis_misses": misses }))
}

fn embed_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<Value, Error> {
    let (mut tested, mut failures, mut worst) = (0, 0, 0.0_f64);
    for _ in 0..n {
        let (k_max, fill) = (rng.gen_range(2..=8), rng.gen_range(0.2..0.9));
        let curve = random_star_shape(rng, 1.0, 32, k_max, 0.01, fill)?;
        let cache = build_cache(&curve)?;
        let solve = solve_ms(&cache, &Kernel::Plane)?;
        match check_improved_embedding(&cache, &solve) {
            Ok(rep) => {
                tested += 1;
                failures += usize::from(!rep.pass);
                worst = worst.max(rep.ratio / rep.bound);
            }
            Err(Error::HypothesisFail(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(json!({ "pass": failures == 0, "tested": tested, "failures": failures, "max_ratio_over_bound": worst }))
}

fn sobolev_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<Value, Error> {
    let (mut worst, mut poincare_fail) = (0.0_f64, 0);
    for _ in 0..n {
        let k = 16;
        let cos: Vec<f64> = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut sin: Vec<f64> = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        sin[0] = 0.0;
        let f = PeriodicSignal::from_cos_sin(&cos, &sin, rng.gen_range(0.5..4.0));
        let alpha = rng.gen_range(-1.0..0.5);
        let beta = rng.gen_range(1.0..2.5);
        let sigma = rng.gen_range(alpha..beta);
        if sigma <= alpha || sigma >= beta {
            continue;
        }
        // negative orders need a mean-free signal
        let mean_free = if alpha < 0.0 { PeriodicSignal::from_cos_sin(&[&[0.0], &cos[1..]].concat(), &sin, f.half_period()) } else { f.clone() };
        worst = worst.max(interpolation_check(&mean_free, alpha, sigma, beta)?.ratio);
        poincare_fail += usize::from(!poincare_check(&f, beta)?.holds());
    }
    Ok(json!({ "pass": worst <= 1.0 + 1e-12 && poincare_fail == 0, "tested": n, "max_interpolation_ratio": worst, "poincare_failures": poincare_fail }))
}

fn elliptic_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<Value, Error> {
    let kernel = LatticeKernel::new(1.0);
    let l = kernel.half_edge();
    let (mut per, mut even) = (0.0_f64, 0.0_f64);
    for _ in 0..n {
        let z = Complex64::new(rng.gen_range(-l..l), rng.gen_range(-l..l));
        if z.norm() < 1e-3 {
            continue;
        }
        let base = lambda_unreduced(&kernel, z);
        per = per
            .max((lambda_unreduced(&kernel, z + 2.0 * l) - base).abs())
            .max((lambda_unreduced(&kernel, z + Complex64::new(0.0, 2.0 * l)) - base).abs());
        even = even.max((lambda(&kernel, -z)? - lambda(&kernel, z)?).abs());
    }
    let leg = legendre_residual(&kernel);
    Ok(json!({ "pass": per <= 1e-10 && even <= 1e-11 && leg <= 1e-12, "periodicity": per, "evenness": even, "legendre": leg }))
}

fn trace_suite() -> Value {
    let mut cos = vec![1.0; 33];
    cos[0] = 0.0;
    let t = trace_equality_disk(&cos, &[0.0; 33], 32);
    let worst = t
        .rows
        .iter()
        .map(|r| {
            let pk = PI * r.k as f64;
            (r.interior - pk).abs().max((r.exterior - pk).abs()).max((r.boundary - pk).abs())
        })
        .fold(0.0, f64::max);
    json!({ "pass": worst <= 1e-10, "max_error": worst })
}

fn trajectory_suites(suites: &[Suite], log: &TrajectoryLog, out: &mut serde_json::Map<String, Value>) {
    for s in suites {
        let v = match s {
            Suite::Eed => {
                let r = check_eed(log);
                json!({ "pass": r.pass(), "report": r })
            }
            Suite::Diff => {
                let r = check_differential(log);
                json!({ "pass": r.pass(), "report": r })
            }
            Suite::Regime => match regime_fit(log) {
                Ok(fit) => {
                    let slope_ok = fit.alg_slope.is_some_and(|s| (s + 1.0).abs() <= 0.15);
                    let rate = 12.0 / log.radius().powi(3);
                    json!({ "pass": slope_ok && (fit.exp_rate / rate - 1.0).abs() <= 0.1, "fit": fit })
                }
                Err(e) => json!({ "pass": false, "error": e.to_string() }),
            },
            Suite::Bary => {
                let r = barycenter_monitor(log);
                json!({ "pass": r.pass, "report": r })
            }
            _ => continue,
        };
        out.insert(format!("{s:?}").to_lowercase(), v);
    }
}

fn checks(suites: &[Suite], n: usize, seed: u64, config: Option<&Path>) -> Outcome {
    let mut out = serde_json::Map::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in suites {
        let v = match s {
            Suite::Fuglede => fuglede_suite(n, &mut rng)?,
            Suite::Embed => embed_suite(n, &mut rng)?,
            Suite::Sobolev => sobolev_suite(n, &mut rng)?,
            Suite::Elliptic => elliptic_suite(n, &mut rng)?,
            Suite::Trace => trace_suite(),
            _ => continue,
        };
        out.insert(format!("{s:?}").to_lowercase(), v);
    }
    let needs_run: Vec<Suite> = suites.iter().copied().filter(|s| matches!(s, Suite::Eed | Suite::Diff | Suite::Regime | Suite::Bary)).collect();
    if !needs_run.is_empty() {
        let cfg = match config {
            Some(p) => load_config(p)?,
            None => RunConfig::parse(DEFAULT_TRAJECTORY)?,
        };
        let log = run_batch(std::slice::from_ref(&cfg)).remove(0)?;
        trajectory_suites(&needs_run, &log, &mut out);
    }
    let pass = out.values().all(|v| v["pass"] == json!(true));
    print_json(&json!({ "seed": seed, "n": n, "pass": pass, "suites": out }));
    Ok(pass)
}

fn hminus(a: &Path, b: &Path, grid: usize) -> Outcome {
    let (ca, cb) = (load_curve(a)?, load_curve(b)?);
    if ca.domain() != cb.domain() {
        return Err(Failure::Usage("curves live on different domains".into()));
    }
    if grid < 8 {
        return Err(Failure::Usage("--grid must be at least 8".into()));
    }
    let half_edge = h_cell(&ca).max(h_cell(&cb));
    let (ra, rb) = (Region::Curve(ca), Region::Curve(cb));
    let h = h_minus_one_fft(&difference_field(&ra, &rb, half_edge, grid), half_edge, grid);
    let og = grid.min(ORACLE_GRID);
    let f = difference_field(&ra, &rb, half_edge, og);
    let fft = h_minus_one_fft(&f, half_edge, og);
    let direct = h_minus_one_direct(&f, &LatticeKernel::new(half_edge), og);
    let delta = if direct != 0.0 { (fft / direct - 1.0).abs() } else { (fft - direct).abs() };
    print_json(&json!({
        "H": h,
        "grid": grid,
        "half_edge": half_edge,
        "oracle": { "grid": og, "fft": fft, "direct": direct, "relative_delta": delta },
    }));
    Ok(delta <= 0.01 || (direct.abs() < 1e-14 && fft.abs() < 1e-14))
}

fn potential_table(half_edge: f64, grid: usize, out: Option<&Path>) -> Outcome {
    if !(half_edge > 0.0) || grid == 0 {
        return Err(Failure::Usage("--half-edge must be positive and --grid nonzero".into()));
    }
    let kernel = LatticeKernel::new(half_edge);
    let h = 2.0 * half_edge / grid as f64;
    let mut csv = format!("# periodic kernel Lambda, L = {half_edge}, cell centers of a {grid}x{grid} grid\nx,y,lambda\n");
    for i in 0..grid {
        for j in 0..grid {
            let z = Complex64::new(-half_edge + (i as f64 + 0.5) * h, -half_edge + (j as f64 + 0.5) * h);
            let v = lambda(&kernel, z).unwrap_or(f64::NAN);
            csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", z.re, z.im, v));
        }
    }
    match out {
        Some(p) => fs::write(p, csv).map_err(|e| Failure::Hard(format!("{}: {e}", p.display())))?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn norms(path: &Path, orders: &[f64]) -> Outcome {
    let curve = load_curve(path)?;
    let kernel = Kernel::for_domain(curve.domain());
    let cache = build_cache(&curve)?;
    let rec = static_record(&curve, &kernel)?;
    let solve = solve_ms(&cache, &kernel)?;
    let r = curve.radius();
    let kbar = cache.mean_curvature();
    let kdev: Vec<f64> = cache.kappa.iter().map(|k| k - kbar).collect();
    let rdev: Vec<f64> = cache.rho.iter().map(|x| x - r).collect();
    let mut sob = Vec::new();
    for &s in orders {
        let entry = |f: &[f64]| curve_norm(&cache, f, s).map_or_else(|e| json!(e.to_string()), |v| json!(v));
        sob.push(json!({
            "order": s,
            "rho_minus_r": if s >= 0.0 { entry(&rdev) } else { Value::Null },
            "kappa_dev": entry(&kdev),
            "velocity": entry(solve.velocity()),
        }));
    }
    let adm = admissibility_report(&curve, 0.05)?;
    print_json(&json!({
        "radius": r,
        "domain": match curve.domain() { Domain::Plane => json!("plane"), Domain::Torus { half_edge } => json!({ "torus": half_edge }) },
        "area": enclosed_area(&cache),
        "perimeter": perimeter(&cache),
        "E": rec.e,
        "D": rec.d,
        "Vs2": rec.vs2,
        "krummel_maggi_ratio": krummel_maggi_ratio(&cache),
        "admissibility": adm,
        "sobolev": sob,
    }));
    Ok(true)
}

fn report(path: &Path) -> Outcome {
    let (meta, rows) = read_trajectory_csv(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let log = TrajectoryLog::from_rows(meta, rows);
    let fit = regime_fit(&log)?;
    let eed = check_eed(&log);
    let diff = check_differential(&log);
    let r3 = log.radius().powi(3);
    let fmt_opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    println!("quantity,value");
    println!("config_hash,{}", log.meta.config_hash);
    println!("rows,{}", log.rows.len());
    println!("algebraic_slope,{}", fmt_opt(fit.alg_slope));
    if let Some(w) = &fit.alg_window {
        println!("algebraic_window,{:.6e}..{:.6e}", w.t_start, w.t_end);
    }
    println!("exp_rate,{:.6}", fit.exp_rate);
    println!("exp_rate_times_r3,{:.6}", fit.exp_rate * r3);
    println!("exp_r2,{:.6}", fit.exp_r2);
    println!("exp_window,{:.6e}..{:.6e}", fit.exp_window.t_start, fit.exp_window.t_end);
    println!("t1,{:.6e}", fit.t1);
    println!("t1_over_r3,{:.6e}", fit.t1_over_r3);
    println!("max_e_over_r3d,{:.6e}", eed.max_e_over_r3d);
    println!("max_e_over_sqrt_hd,{:.6e}", eed.max_e_over_sqrt_hd);
    println!("eed_monotone,{}", eed.pass());
    println!("max_energy_balance_error,{:.3e}", diff.max_balance_error);
    Ok(eed.pass() && diff.pass())
}

fn init_threads() {
    if let Some(n) = std::env::var("MSRELAX_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = match &cli.command {
        Command::Simulate { config, out_dir } => simulate(config, out_dir.as_deref()),
        Command::Checks { suite, n, seed, config } => checks(suite, *n, *seed, config.as_deref()),
        Command::Hminus { a, b, grid } => hminus(a, b, *grid),
        Command::PotentialTable { half_edge, grid, out } => potential_table(*half_edge, *grid, out.as_deref()),
        Command::Norms { curve, orders } => norms(curve, orders),
        Command::Report { trajectory } => report(trajectory),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Hard(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
