use msrelax::analysis::{barycenter_monitor, check_differential, check_eed, regime_fit};
use msrelax::config::RunConfig;
use msrelax::evolution::{recenter, rhs, run, run_batch, FlowState, RunStatus, TrajectoryLog};
use msrelax::geometry::{barycenter_bulk, build_cache, Domain, RadialCurve};
use msrelax::output::{read_trajectory_csv, trajectory_csv};
use msrelax::potential::Kernel;
use msrelax::Error;

fn cfg(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap()
}

#[test]
fn circle_run_has_zero_gaps() {
    let log = run(&cfg("N = 16\nt_end = 0.01\nk_h = 1\ngrid = 64\n")).unwrap();
    assert_eq!(log.status, RunStatus::Completed);
    assert!(log.rows.len() > 2);
    for r in &log.rows {
        assert!(r.e.abs() < 1e-14 && r.d.abs() < 1e-14 && r.bary < 1e-12, "{r:?}");
        assert!(r.h.unwrap().abs() < 1e-14);
    }
    assert!(matches!(regime_fit(&log), Err(Error::NoExponentialWindow)));
}

#[test]
fn time_strictly_increases_and_energy_decreases() {
    let log = run(&cfg("N = 32\nmodes = 2, 3\namps = 0.01, 0.005\nphases = 0.3, 1.1\nt_end = 0.02\nk_h = 0\n")).unwrap();
    let e0 = log.rows[0].e;
    for w in log.rows.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].e <= w[0].e + 1e-9 * e0);
        assert!(w[1].eed < w[0].eed);
    }
    assert!(check_differential(&log).pass());
    assert!(check_eed(&log).verify().is_ok());
}

#[test]
fn single_mode_has_no_algebraic_window() {
    let log = run(&cfg("N = 32\nmodes = 2\namps = 1e-3\nphases = 0\nt_end = 0.1\nk_h = 0\n")).unwrap();
    let fit = regime_fit(&log).unwrap();
    assert!(matches!(fit.require_algebraic(), Err(Error::NoAlgebraicWindow)));
    assert!((fit.exp_rate / 12.0 - 1.0).abs() < 0.1, "{fit:?}");
}

#[test]
fn recentering_is_a_gauge_choice() {
    let base = "N = 32\nmodes = 2, 3\namps = 0.02, 0.02\nphases = 0, 0.7\nt_end = 0.01\ndt_policy = fixed\ndt0 = 2.5e-4\nk_h = 0\n";
    let a = run(&cfg(&format!("{base}k_rec = 1\n"))).unwrap();
    let b = run(&cfg(&format!("{base}k_rec = 20\n"))).unwrap();
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((x.t - y.t).abs() < 1e-15);
        assert!((x.e / y.e - 1.0).abs() <= 1e-6, "E {} vs {}", x.e, y.e);
        assert!((x.d / y.d - 1.0).abs() <= 1e-6, "D {} vs {}", x.d, y.d);
    }
}

#[test]
fn even_modes_keep_the_barycenter() {
    let log = run(&cfg("N = 32\nmodes = 2, 4\namps = 0.02, 0.01\nphases = 0.4, 1.0\nt_end = 0.01\nk_h = 0\n")).unwrap();
    assert!(log.rows.iter().all(|r| r.bary < 1e-10));
    assert!(barycenter_monitor(&log).pass);
}

#[test]
fn recenter_restores_barycenter_condition() {
    let c = RadialCurve::from_modes(1.0, 64, &[(1, 0.03, 0.2), (2, 0.02, 0.0), (3, 0.01, 0.5)], Domain::Plane)
        .and_then(|c| c.with_target_area())
        .unwrap();
    let s = recenter(&FlowState::new(c)).unwrap();
    let g = build_cache(&s.curve).unwrap();
    let b = barycenter_bulk(&g);
    let p = s.curve.pole();
    assert!((b[0] - p[0]).hypot(b[1] - p[1]) <= 1e-10);
}

#[test]
fn rhs_conserves_area() {
    let c = RadialCurve::from_modes(1.0, 32, &[(2, 0.03, 0.0), (5, 0.01, 0.3)], Domain::Plane).unwrap();
    let g = build_cache(&c).unwrap();
    let v = rhs(&c, &Kernel::Plane).unwrap();
    let flux: f64 = g.rho.iter().zip(&v).map(|(r, v)| r * v).sum::<f64>() * g.dphi();
    let scale: f64 = g.rho.iter().zip(&v).map(|(r, v)| (r * v).abs()).sum::<f64>() * g.dphi();
    assert!(flux.abs() <= 1e-10 * scale);
}

#[test]
fn output_is_deterministic_and_parses_back() {
    let text = "N = 16\nmodes = 2, 5\namps = 0.01, 0.002\nphases = random\nseed = 9\nt_end = 0.005\nk_h = 2\ngrid = 64\n";
    let a = trajectory_csv(&run(&cfg(text)).unwrap());
    let b = trajectory_csv(&run(&cfg(text)).unwrap());
    assert_eq!(a, b);
    let (meta, rows) = read_trajectory_csv(&a).unwrap();
    assert_eq!(meta.config_hash, cfg(text).hash());
    assert_eq!(meta.n_modes, 16);
    let log = run(&cfg(text)).unwrap();
    assert_eq!(rows, log.rows);
    let again = trajectory_csv(&TrajectoryLog { meta, ..log });
    assert_eq!(again, a);
}

#[test]
fn batch_matches_sequential_runs() {
    let cfgs: Vec<RunConfig> = (0..3)
        .map(|i| cfg(&format!("N = 16\nmodes = 2\namps = {}\nphases = 0\nt_end = 0.003\nk_h = 0\n", 0.01 * (i + 1) as f64)))
        .collect();
    let batch = run_batch(&cfgs);
    for (c, b) in cfgs.iter().zip(batch) {
        assert_eq!(b.unwrap().rows, run(c).unwrap().rows);
    }
}

#[test]
fn unresolved_initial_curve_is_refused() {
    let r = run(&cfg("N = 16\nmodes = 15\namps = 0.05\nphases = 0\nt_end = 0.01\nk_h = 0\n"));
    assert!(matches!(r, Err(Error::Unresolved { .. })));
}

#[test]
fn energy_stop_ends_the_run() {
    let log = run(&cfg("N = 16\nmodes = 3\namps = 0.01\nphases = 0\nt_end = 1\ne_stop = 1e-6\nk_h = 0\n")).unwrap();
    assert_eq!(log.status, RunStatus::EnergyStop);
    assert!(log.rows.last().unwrap().e < 1e-6);
}
