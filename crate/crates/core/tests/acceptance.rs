//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use msrelax::analysis::{
    barycenter_monitor, check_differential, check_eed, check_fuglede, exponential_rate, regime_fit, static_record,
    unit_centered, FugledeReport,
};
use msrelax::config::RunConfig;
use msrelax::elliptic::{lambda, lambda_unreduced, legendre_residual, LatticeKernel};
use msrelax::evolution::{disk_rate, run, TrajectoryLog};
use msrelax::geometry::{admissibility_report, build_cache, random_star_shape, Domain, RadialCurve};
use msrelax::potential::{
    difference_field, gauss_legendre01, h_minus_one_direct, h_minus_one_fft, solve_with_data, trace_equality_disk,
    Kernel, Region,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Suite {
    results: Vec<(usize, bool, String)>,
    logs: Vec<(String, TrajectoryLog)>,
}

impl Suite {
    fn report(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        let line = format!("criterion {id:>2} {:<4} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((id, pass, line));
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn linear_rates(s: &mut Suite) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (domain, tol) in [("plane", 0.02), ("torus", 0.05)] {
        for k in [2usize, 3, 4] {
            let rate = disk_rate(k, 1.0);
            let t_end = 1.2 / rate;
            let text = format!(
                "domain = {domain}\nR = 1\nN = 128\nmodes = {k}\namps = 1e-3\nphases = 0\nt_end = {t_end}\nk_h = 0\n"
            );
            let cfg = RunConfig::parse(&text).unwrap();
            let start = Instant::now();
            let log = run(&cfg).unwrap();
            let secs = start.elapsed().as_secs_f64();
            let n = log.rows.len();
            let (fit, _) = exponential_rate(&log.rows, 1, n - 1);
            let err = relative(fit, rate);
            let pass = err <= tol && secs <= 60.0;
            ok &= pass;
            parts.push(format!("{domain} k={k} rate {fit:.5} vs {rate} (err {err:.1e}, {secs:.1}s)"));
            s.logs.push((format!("{domain} k={k}"), log));
        }
    }
    s.report(1, "linearized decay rates (plane 2%, torus L=8R 5%, <= 60 s/run)", ok, parts.join("; "));
}

fn energy_balance(s: &mut Suite) {
    let mut worst = 0.0_f64;
    let mut rows = 0;
    for (_, log) in &s.logs {
        let rep = check_differential(log);
        worst = worst.max(rep.max_balance_error);
        rows += rep.rows_checked;
    }
    let pass = worst <= 1e-3;
    s.report(2, "energy balance dE/dt = -D (1e-3 relative)", pass, format!("max rel error {worst:.3e} over {rows} interior rows of {} runs", s.logs.len()));
}

fn conservation(s: &mut Suite) {
    let post = s.logs.iter().map(|(_, l)| l.max_area_error).fold(0.0, f64::max);
    let pre = s.logs.iter().map(|(_, l)| l.max_area_drift).fold(0.0, f64::max);
    let pass = post <= 1e-12 && pre <= 1e-9;
    s.report(3, "area conservation (post 1e-12, pre-projection 1e-9)", pass, format!("post {post:.2e}, pre {pre:.2e}"));
}

fn eed_monotone(s: &mut Suite) {
    let mut pass = true;
    let mut worst = 0.0_f64;
    for (name, log) in &s.logs {
        let rep = check_eed(log);
        if !rep.pass() {
            println!("    E^2 D violation in {name}: {:?}", rep.violation);
        }
        pass &= rep.pass();
        let e0 = log.rows[0].eed;
        if e0 > 0.0 {
            worst = worst.max(rep.max_increase / e0);
        }
    }
    s.report(4, "E^2 D non-increasing (slack 1e-9 initial)", pass, format!("largest relative step increase {worst:.2e}"));
}

fn fuglede(s: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut tested, mut failures, mut hyp) = (0, 0, 0);
    let mut tightest = (f64::INFINITY, f64::INFINITY);
    while tested < 1000 {
        let radius = rng.gen_range(0.5..2.0);
        let k_max = rng.gen_range(2..=16);
        let fill = rng.gen_range(0.2..0.9);
        let curve = random_star_shape(&mut rng, radius, 64, k_max, 0.05, fill).unwrap();
        let unit = unit_centered(&curve).unwrap();
        if !admissibility_report(&unit, 0.05).unwrap().passed() {
            continue;
        }
        tested += 1;
        let rep: FugledeReport = check_fuglede(&curve).unwrap();
        if !rep.hypotheses_ok {
            hyp += 1;
        }
        if !rep.pass {
            failures += 1;
        }
        tightest.0 = tightest.0.min(rep.deficit / rep.lower);
        tightest.1 = tightest.1.min(rep.upper / rep.deficit);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures == 0 && hyp == 0 && secs <= 30.0;
    s.report(
        5,
        "Fuglede sandwich 1/10, 3/5 on 1000 admissible curves (<= 30 s)",
        pass,
        format!(
            "{failures} failures, {hyp} hypothesis misses, min deficit/lower {:.3}, min upper/deficit {:.3}, {secs:.1}s",
            tightest.0, tightest.1
        ),
    );
}

fn trace(s: &mut Suite) {
    let mut cos = vec![0.0; 33];
    cos.iter_mut().skip(1).for_each(|c| *c = 1.0);
    let t = trace_equality_disk(&cos, &[0.0; 33], 32);
    let worst = t
        .rows
        .iter()
        .map(|r| {
            let pk = PI * r.k as f64;
            (r.interior - pk).abs().max((r.exterior - pk).abs()).max((r.boundary - pk).abs())
        })
        .fold(0.0, f64::max);
    s.report(6, "trace equality on the disk, k <= 32 (1e-10)", worst <= 1e-10, format!("max |side - pi k| = {worst:.2e}"));
}

/// Outward flux of `grad Lambda` through the square `|x|, |y| = a`.
fn flux(kernel: &LatticeKernel, a: f64) -> f64 {
    let (gx, gw) = gauss_legendre01(32);
    let h = 1e-5;
    let f = |z: Complex64| lambda(kernel, z).unwrap();
    let panels = 8;
    let mut total = 0.0;
    for p in 0..panels {
        for (x, w) in gx.iter().zip(&gw) {
            let s = -a + 2.0 * a * (p as f64 + x) / panels as f64;
            let ds = 2.0 * a / panels as f64 * w;
            for (z, n) in [
                (Complex64::new(a, s), Complex64::new(1.0, 0.0)),
                (Complex64::new(-a, s), Complex64::new(-1.0, 0.0)),
                (Complex64::new(s, a), Complex64::new(0.0, 1.0)),
                (Complex64::new(s, -a), Complex64::new(0.0, -1.0)),
            ] {
                let dn = (f(z + n * h) - f(z - n * h)) / (2.0 * h);
                total += dn * ds;
            }
        }
    }
    total
}

fn elliptic(s: &mut Suite) {
    let kernel = LatticeKernel::new(1.0);
    let l = kernel.half_edge();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut per = 0.0_f64;
    for _ in 0..100 {
        let z = Complex64::new(rng.gen_range(-l..l), rng.gen_range(-l..l));
        let base = lambda_unreduced(&kernel, z);
        per = per
            .max((lambda_unreduced(&kernel, z + 2.0 * l) - base).abs())
            .max((lambda_unreduced(&kernel, z + Complex64::new(0.0, 2.0 * l)) - base).abs());
    }
    let leg = legendre_residual(&kernel);
    // enclosed charge 2 pi - (pi / (2 L^2)) (2a)^2, zero for the whole cell
    let mut charge = 0.0_f64;
    for a in [0.5 * l, 0.75 * l, l] {
        let expect = 2.0 * PI - PI / (2.0 * l * l) * 4.0 * a * a;
        charge = charge.max((flux(&kernel, a) - expect).abs());
    }
    let pass = per <= 1e-10 && leg <= 1e-12 && charge <= 1e-6;
    s.report(7, "elliptic kernel (periodicity 1e-10, Legendre 1e-12, charge 1e-6)", pass, format!("periodicity {per:.2e}, Legendre {leg:.2e}, charge {charge:.2e}"));
}

fn bie_convergence(s: &mut Suite) {
    let r = 1.0;
    let mut disk_err = 0.0_f64;
    let mut curve_pts = Vec::new();
    for n in [16usize, 32, 64, 128, 256] {
        let g = build_cache(&RadialCurve::circle(r, n, Domain::Plane).unwrap()).unwrap();
        let mut e_n = 0.0_f64;
        for k in 1..=8usize.min(n - 1) {
            let data: Vec<f64> = g.phi.iter().map(|p| (k as f64 * p).cos()).collect();
            let sol = solve_with_data(&g, &Kernel::Plane, &data).unwrap();
            let e = g
                .phi
                .iter()
                .zip(sol.velocity())
                .map(|(p, v)| (v + 2.0 * k as f64 / r * (k as f64 * p).cos()).abs())
                .fold(0.0, f64::max);
            e_n = e_n.max(e);
        }
        if n == 256 {
            disk_err = e_n;
        }
        curve_pts.push((n, e_n));
    }
    // self-convergence of the curvature solve on a non-circular curve
    let shape = |n: usize| {
        let c = RadialCurve::from_modes(1.0, n, &[(3, 0.15, 0.0), (5, 0.05, 0.4)], Domain::Plane).unwrap();
        let g = build_cache(&c).unwrap();
        let sol = msrelax::potential::solve_ms(&g, &Kernel::Plane).unwrap();
        msrelax::spectral::analyze(sol.velocity(), 16)
    };
    let reference = shape(256);
    let mut decay = Vec::new();
    for n in [16usize, 32, 64, 128] {
        let (a, b) = shape(n);
        let e = (0..16).map(|k| (a[k] - reference.0[k]).abs() + (b[k] - reference.1[k]).abs()).fold(0.0, f64::max);
        decay.push(format!("N={n}: {e:.1e}"));
    }
    let disk = curve_pts.iter().map(|(n, e)| format!("N={n}: {e:.1e}")).collect::<Vec<_>>().join(", ");
    s.report(
        8,
        "BIE disk mode density, k <= 8 at N = 256 (< 1e-8)",
        disk_err < 1e-8,
        format!("disk [{disk}]; non-circular self-convergence [{}]", decay.join(", ")),
    );
}

fn h_oracle(s: &mut Suite) {
    let l = 2.0;
    let kernel = LatticeKernel::new(l);
    let grid = 64;
    let disk = Region::Disk { center: [0.0, 0.0], radius: 1.0 };
    let shifted = Region::Disk { center: [0.1, 0.0], radius: 1.0 };
    let mode2 = Region::Curve(
        RadialCurve::from_modes(1.0, 32, &[(2, 0.1, 0.0)], Domain::Torus { half_edge: l })
            .and_then(|c| c.with_target_area())
            .unwrap(),
    );
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (name, other) in [("shifted disk", &shifted), ("mode 2", &mode2)] {
        let f = difference_field(&disk, other, l, grid);
        let fft = h_minus_one_fft(&f, l, grid);
        let direct = h_minus_one_direct(&f, &kernel, grid);
        let e = relative(fft, direct);
        worst = worst.max(e);
        parts.push(format!("{name}: fft {fft:.6e} direct {direct:.6e} (rel {e:.1e})"));
    }
    s.report(9, "H grid FFT vs direct Green sum on 64^2 (1%)", worst <= 0.01, parts.join("; "));
}

fn single_mode_ratio() -> (bool, String) {
    let r = 1.3;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [2usize, 3, 4, 5] {
        let target = 1.0 / (4.0 * k as f64 * ((k * k) as f64 - 1.0));
        let mut errs = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let c = RadialCurve::from_modes(r, 64, &[(k, eps * r, 0.0)], Domain::Plane)
                .and_then(|c| c.with_target_area())
                .unwrap();
            let row = static_record(&c, &Kernel::Plane).unwrap();
            errs.push(relative(row.e / (r.powi(3) * row.d), target));
        }
        ok &= errs[2] <= 0.05 && errs[2] <= errs[0];
        parts.push(format!("k={k}: {:.1e}/{:.1e}/{:.1e}", errs[0], errs[1], errs[2]));
    }
    (ok, format!("E/(R^3 D) vs 1/(4k(k^2-1)) at eps 1e-2/1e-3/1e-4: {}", parts.join(", ")))
}

fn regime(s: &mut Suite) {
    let start = Instant::now();
    let base = "R = 1\nmodes = 2, 8, 9, 10, 11, 12, 13, 14, 15, 16\n\
                amps = 1e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4, 4.9e-4\n\
                seed = 1\nt_end = 0.3\nk_h = 5\n";
    let mut fits = Vec::new();
    let mut hd = Vec::new();
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, c_acc) in [(64, 0.01), (128, 0.005)] {
        let cfg = RunConfig::parse(&format!("{base}N = {n}\nc_acc = {c_acc}\n")).unwrap();
        let log = run(&cfg).unwrap();
        let e0 = log.rows[0].e;
        let d0 = log.rows[0].d;
        ok &= e0 <= 1e-3 * cfg.radius;
        match regime_fit(&log) {
            Ok(fit) => {
                let slope = fit.alg_slope.unwrap_or(f64::NAN);
                ok &= (slope + 1.0).abs() <= 0.15 && relative(fit.exp_rate, 12.0) <= 0.10;
                parts.push(format!(
                    "N={n}: E0 {e0:.2e}, D0 R^3/E0 {:.0}, slope {slope:.4}, rate {:.4}, T1/R^3 {:.5e}",
                    d0 / e0,
                    fit.exp_rate,
                    fit.t1_over_r3
                ));
                fits.push(fit);
            }
            Err(e) => {
                ok = false;
                parts.push(format!("N={n}: {e}"));
            }
        }
        hd.push(check_eed(&log).max_e_over_sqrt_hd);
        s.logs.push((format!("mixed N={n}"), log));
    }
    let secs = start.elapsed().as_secs_f64();
    let t1_change = if fits.len() == 2 { relative(fits[1].t1, fits[0].t1) } else { f64::INFINITY };
    ok &= t1_change <= 0.01 && secs <= 600.0;
    s.report(
        11,
        "regime structure (slope -1 +- 0.15, rate 12/R^3 +- 10%, T1 <= C R^3 refinement-stable, <= 10 min)",
        ok,
        format!("{}; C = T1/R^3 change {t1_change:.1e}; {secs:.0}s", parts.join("; ")),
    );

    let (single_ok, single) = single_mode_ratio();
    let hd_change = relative(hd[1], hd[0]);
    let finite = hd.iter().all(|x| x.is_finite() && *x > 0.0);
    s.report(
        10,
        "static inequality monitors",
        single_ok && finite && hd_change <= 0.01,
        format!("{single}; max E/sqrt(HD) {:.5} (N=64) {:.5} (N=128), change {hd_change:.1e}", hd[0], hd[1]),
    );
}

fn barycenter(s: &mut Suite) {
    let cfg = RunConfig::parse("R = 1\nN = 64\nmodes = 2, 3\namps = 0.01, 0.01\nphases = random\nseed = 12\nt_end = 0.2\nk_h = 0\n").unwrap();
    let log = run(&cfg).unwrap();
    let rep = barycenter_monitor(&log);
    s.report(
        12,
        "barycenter confinement max|c|/sqrt(E(0) R) <= 5",
        rep.pass,
        format!("ratio {:.3e} (cap {}), max |c'|^2 |Omega| / D = {:.3e}", rep.max_ratio, rep.cap, rep.max_velocity_ratio),
    );
    s.logs.push(("barycenter".into(), log));
}

fn main() {
    let start = Instant::now();
    let mut s = Suite { results: Vec::new(), logs: Vec::new() };
    linear_rates(&mut s);
    fuglede(&mut s);
    trace(&mut s);
    elliptic(&mut s);
    bie_convergence(&mut s);
    h_oracle(&mut s);
    regime(&mut s);
    barycenter(&mut s);
    energy_balance(&mut s);
    conservation(&mut s);
    eed_monotone(&mut s);
    s.results.sort_by_key(|r| r.0);
    for r in &s.results {
        println!("{}", r.2);
    }
    let failed: Vec<usize> = s.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.0}s",
        s.results.len() - failed.len(),
        s.results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
