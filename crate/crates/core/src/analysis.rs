//! Diagnostics rows and the verification harness for the functional
//! inequalities and the two relaxation regimes.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{recenter, FlowState, TrajectoryLog};
use crate::geometry::{
    barycenter_bulk, build_cache, build_cache_with, energy_gap, equal_area_radius, GeometryCache,
    RadialCurve, ResolutionPolicy,
};
use crate::potential::{dissipation, velocity_norms, BieSolve};
use crate::spectral;

/// Number of mode amplitudes stored per row.
pub const MODE_COLUMNS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e: f64,
    /// `None` on rows where `H` was not evaluated.
    pub h: Option<f64>,
    pub d: f64,
    /// `|c(t) - c(0)|`
    pub bary: f64,
    /// `c(t) - c(0)`
    pub center: [f64; 2],
    /// `|V_s|^2_{L^2(Gamma)}`
    pub vs2: f64,
    /// `E^2 D`
    pub eed: f64,
    /// `sup |rho - R|`
    pub sup_rho_dev: f64,
    /// `sup |rho_phi|`
    pub sup_slope: f64,
    /// `|rho_k|` for `k = 1..=16` (zero past the resolved modes).
    pub mode_amps: Vec<f64>,
}

/// Assembles one row; `origin` is the barycenter at `t = 0`.
pub fn record(cache: &GeometryCache, solve: &BieSolve, t: f64, h: Option<f64>, origin: [f64; 2]) -> Result<DiagnosticsRecord> {
    let e = energy_gap(cache);
    let d = dissipation(cache, solve)?;
    let norms = velocity_norms(cache, solve.velocity())?;
    let c = barycenter_bulk(cache);
    let center = [c[0] - origin[0], c[1] - origin[1]];
    let curve = &cache.curve;
    let r = curve.radius();
    Ok(DiagnosticsRecord {
        t,
        e,
        h,
        d,
        bary: center[0].hypot(center[1]),
        center,
        vs2: norms.vs_l2 * norms.vs_l2,
        eed: e * e * d,
        sup_rho_dev: cache.rho.iter().map(|x| (x - r).abs()).fold(0.0, f64::max),
        sup_slope: cache.rho_phi.iter().map(|x| x.abs()).fold(0.0, f64::max),
        mode_amps: (1..=MODE_COLUMNS).map(|k| if k < curve.n_modes() { curve.amplitude(k) } else { 0.0 }).collect(),
    })
}

/// `alpha = max(H, E R^3)` of a row.
pub fn alpha(row: &DiagnosticsRecord, radius: f64) -> Option<f64> {
    row.h.map(|h| h.max(row.e * radius.powi(3)))
}

/// Isoperimetric sandwich constants.
pub const FUGLEDE_LOWER: f64 = 0.1;
pub const FUGLEDE_UPPER: f64 = 0.6;
/// Hypothesis bounds at unit scale in the plane.
pub const FUGLEDE_SUP_U: f64 = 3.0 / 40.0;
pub const FUGLEDE_SUP_GRAD: f64 = 0.5;

/// Sandwich `lower <= deficit <= upper` with norms in the normalized measure
/// `dphi / (2 pi)` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FugledeReport {
    /// `L / (2 pi) - 1` after rescaling to area `pi`.
    pub deficit: f64,
    /// `(|u|^2 + |u_phi|^2) / 10`
    pub lower: f64,
    /// `3 |u_phi|^2 / 5`
    pub upper: f64,
    pub sup_u: f64,
    pub sup_grad: f64,
    pub hypotheses_ok: bool,
    pub pass: bool,
}

/// The curve rescaled to enclose area `pi` and re-expanded about its
/// barycenter.
pub fn unit_centered(curve: &RadialCurve) -> Result<RadialCurve> {
    let unit = curve.scaled(1.0 / equal_area_radius(curve))?;
    let unit = RadialCurve::new(1.0, unit.cos().to_vec(), unit.sin().to_vec(), unit.pole(), unit.domain())?;
    Ok(recenter(&FlowState::new(unit))?.curve)
}

/// Rescales to the unit-area disk, recenters on the barycenter and checks the
/// sandwich. Hypothesis failures are reported in `hypotheses_ok`.
pub fn check_fuglede(curve: &RadialCurve) -> Result<FugledeReport> {
    let centered = unit_centered(curve)?;
    let lax = ResolutionPolicy { abort_ratio: f64::INFINITY };
    let cache = build_cache_with(&centered, &lax)?;
    let m = cache.n_nodes();
    let fine = 4 * m;
    let u: Vec<f64> = spectral::upsample(&cache.rho, fine).iter().map(|r| r - 1.0).collect();
    let up = spectral::upsample(&cache.rho_phi, fine);
    let mean_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    let u_sq = mean_sq(&u);
    let grad_sq = mean_sq(&up);
    let deficit = energy_gap(&cache) / (2.0 * PI);
    let sup_u = u.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let sup_grad = up.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let lower = FUGLEDE_LOWER * (u_sq + grad_sq);
    let upper = FUGLEDE_UPPER * grad_sq;
    Ok(FugledeReport {
        deficit,
        lower,
        upper,
        sup_u,
        sup_grad,
        hypotheses_ok: sup_u <= FUGLEDE_SUP_U && sup_grad <= FUGLEDE_SUP_GRAD,
        pass: lower <= deficit && deficit <= upper,
    })
}

/// Three-point derivative at the middle of a non-uniform stencil.
fn lagrange_derivative(t: [f64; 3], y: [f64; 3]) -> f64 {
    let [t0, t1, t2] = t;
    y[0] * (t1 - t2) / ((t0 - t1) * (t0 - t2))
        + y[1] * (2.0 * t1 - t0 - t2) / ((t1 - t0) * (t1 - t2))
        + y[2] * (t1 - t0) / ((t2 - t0) * (t2 - t1))
}

/// `dq/dt` at interior row `i`, differencing `log q` when `q > 0` throughout.
fn log_derivative(t: [f64; 3], q: [f64; 3]) -> f64 {
    if q.iter().all(|&x| x > 0.0) {
        q[1] * lagrange_derivative(t, q.map(f64::ln))
    } else {
        lagrange_derivative(t, q)
    }
}

/// Slack of the `E^2 D` monotonicity check relative to its initial value.
pub const EED_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EedReport {
    /// Largest `E / (R^3 D)` over rows with `D > 0`.
    pub max_e_over_r3d: f64,
    /// Largest `E / sqrt(H D)` over rows carrying `H`.
    pub max_e_over_sqrt_hd: f64,
    pub rows_used: usize,
    pub all_finite: bool,
    /// First row where `E^2 D` grew beyond the slack.
    pub violation: Option<(usize, f64, f64)>,
    pub max_increase: f64,
}

impl EedReport {
    pub fn pass(&self) -> bool {
        self.all_finite && self.violation.is_none()
    }

    pub fn verify(&self) -> Result<()> {
        match self.violation {
            Some((row, before, after)) => Err(Error::MonotoneViolation { row, before, after }),
            None => Ok(()),
        }
    }
}

pub fn check_eed(log: &TrajectoryLog) -> EedReport {
    let r3 = log.radius().powi(3);
    let mut rep = EedReport {
        max_e_over_r3d: 0.0,
        max_e_over_sqrt_hd: 0.0,
        rows_used: 0,
        all_finite: true,
        violation: None,
        max_increase: 0.0,
    };
    for row in &log.rows {
        if row.d > 0.0 && row.e > 0.0 {
            let q = row.e / (r3 * row.d);
            rep.all_finite &= q.is_finite();
            rep.max_e_over_r3d = rep.max_e_over_r3d.max(q);
            rep.rows_used += 1;
            if let Some(h) = row.h.filter(|h| *h > 0.0) {
                let q = row.e / (h * row.d).sqrt();
                rep.all_finite &= q.is_finite();
                rep.max_e_over_sqrt_hd = rep.max_e_over_sqrt_hd.max(q);
            }
        }
    }
    let slack = EED_SLACK * log.rows.first().map_or(0.0, |r| r.eed);
    for (i, w) in log.rows.windows(2).enumerate() {
        let inc = w[1].eed - w[0].eed;
        rep.max_increase = rep.max_increase.max(inc);
        if inc > slack && rep.violation.is_none() {
            rep.violation = Some((i + 1, w[0].eed, w[1].eed));
        }
    }
    rep
}

/// Relative tolerance of the energy balance.
pub const ENERGY_BALANCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialReport {
    /// Largest `|dE/dt + D| / D` over interior rows.
    pub max_balance_error: f64,
    pub worst_row: Option<usize>,
    pub rows_checked: usize,
    /// Largest `(dH/dt) / sqrt(H D)` over interior rows carrying `H`.
    pub max_dh_ratio: f64,
    /// Largest `(dD/dt + |V_s|^2) / (E D^3 + D^{5/2})`.
    pub max_dd_ratio: f64,
    /// Rows where `dD/dt + 2 |V_s|^2` is positive.
    pub dd_positive_rows: usize,
    worst: Option<(usize, f64, f64)>,
}

impl DifferentialReport {
    pub fn pass(&self) -> bool {
        self.max_balance_error <= ENERGY_BALANCE_TOL
    }

    pub fn verify(&self) -> Result<()> {
        match self.worst {
            Some((row, de_dt, minus_d)) if !self.pass() => Err(Error::EnergyBalanceFail { row, de_dt, minus_d }),
            _ => Ok(()),
        }
    }
}

/// Rows with `D` below this fraction of the initial `D` are too close to
/// equilibrium for a relative balance check.
pub const BALANCE_FLOOR: f64 = 1e-12;

pub fn check_differential(log: &TrajectoryLog) -> DifferentialReport {
    let rows = &log.rows;
    let mut rep = DifferentialReport {
        max_balance_error: 0.0,
        worst_row: None,
        rows_checked: 0,
        max_dh_ratio: f64::NEG_INFINITY,
        max_dd_ratio: f64::NEG_INFINITY,
        dd_positive_rows: 0,
        worst: None,
    };
    let d0 = rows.iter().map(|r| r.d).fold(0.0, f64::max);
    for i in 1..rows.len().saturating_sub(1) {
        let (a, b, c) = (&rows[i - 1], &rows[i], &rows[i + 1]);
        if b.d <= BALANCE_FLOOR * d0 || b.d <= 0.0 {
            continue;
        }
        let t = [a.t, b.t, c.t];
        let de = log_derivative(t, [a.e, b.e, c.e]);
        let err = (de + b.d).abs() / b.d;
        rep.rows_checked += 1;
        if err > rep.max_balance_error {
            rep.max_balance_error = err;
            rep.worst_row = Some(i);
            rep.worst = Some((i, de, -b.d));
        }
        let dd = log_derivative(t, [a.d, b.d, c.d]);
        if dd + 2.0 * b.vs2 > 0.0 {
            rep.dd_positive_rows += 1;
        }
        let scale = b.e * b.d.powi(3) + b.d.powf(2.5);
        if scale > 0.0 {
            rep.max_dd_ratio = rep.max_dd_ratio.max((dd + b.vs2) / scale);
        }
    }
    let with_h: Vec<&DiagnosticsRecord> = rows.iter().filter(|r| r.h.is_some()).collect();
    for w in with_h.windows(3) {
        let (h0, h1, h2) = (w[0].h.unwrap(), w[1].h.unwrap(), w[2].h.unwrap());
        let dh = lagrange_derivative([w[0].t, w[1].t, w[2].t], [h0, h1, h2]);
        let s = (h1 * w[1].d).sqrt();
        if s > 0.0 {
            rep.max_dh_ratio = rep.max_dh_ratio.max(dh / s);
        }
    }
    rep
}

/// Fits over log-time windows spanning at least this factor in `t`.
pub const ALG_SPAN: f64 = 4.0;
pub const MIN_WINDOW: usize = 10;
pub const ALG_SLOPE_RANGE: (f64, f64) = (-1.3, -0.7);
pub const EXP_R2: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeFit {
    /// Crossover time: where the window running to the end first fits an
    /// exponential with `R^2 >= 0.999`.
    pub t1: f64,
    pub t1_over_r3: f64,
    /// `d log E / d log t` on the algebraic window.
    pub alg_slope: Option<f64>,
    /// Amplitude decay rate on the exponential window (`E` decays at twice it).
    pub exp_rate: f64,
    pub exp_r2: f64,
    pub alg_window: Option<Window>,
    pub exp_window: Window,
}

impl RegimeFit {
    pub fn require_algebraic(&self) -> Result<f64> {
        self.alg_slope.ok_or(Error::NoAlgebraicWindow)
    }
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Amplitude decay rate fitted to `log E` over rows `start..=end`.
pub fn exponential_rate(rows: &[DiagnosticsRecord], start: usize, end: usize) -> (f64, f64) {
    let t: Vec<f64> = rows[start..=end].iter().map(|r| r.t).collect();
    let y: Vec<f64> = rows[start..=end].iter().map(|r| r.e.ln()).collect();
    let (s, r2) = linear_fit(&t, &y);
    (-0.5 * s, r2)
}

/// Locates the exponential window (the earliest start from which `log E` is
/// linear in `t` through the end of the log) and, before it, the log-time
/// window whose log-log slope lies in range and is closest to -1.
pub fn regime_fit(log: &TrajectoryLog) -> Result<RegimeFit> {
    let rows: Vec<DiagnosticsRecord> = log.rows.iter().filter(|r| r.t > 0.0 && r.e > 0.0).cloned().collect();
    let n = rows.len();
    if n < MIN_WINDOW {
        return Err(Error::NoExponentialWindow);
    }
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let lt: Vec<f64> = t.iter().map(|t| t.ln()).collect();
    let le: Vec<f64> = rows.iter().map(|r| r.e.ln()).collect();

    let mut exp = None;
    let mut prev_r2 = f64::NAN;
    for s in 0..=n - MIN_WINDOW {
        let (slope, r2) = linear_fit(&t[s..], &le[s..]);
        if r2 >= EXP_R2 && slope < 0.0 {
            // crossing of the R^2 threshold, interpolated between rows
            let t1 = if s > 0 && prev_r2 < EXP_R2 {
                let w = (EXP_R2 - prev_r2) / (r2 - prev_r2);
                t[s - 1] + w * (t[s] - t[s - 1])
            } else {
                t[s]
            };
            exp = Some((s, t1, -0.5 * slope, r2));
            break;
        }
        prev_r2 = r2;
    }
    let (s, t1, rate, r2) = exp.ok_or(Error::NoExponentialWindow)?;

    let span = ALG_SPAN.ln();
    let mut best: Option<(f64, Window)> = None;
    for i in 0..s {
        let Some(j) = (i + MIN_WINDOW - 1..s).find(|&j| lt[j] - lt[i] >= span) else { break };
        let (slope, _) = linear_fit(&lt[i..=j], &le[i..=j]);
        let in_range = slope >= ALG_SLOPE_RANGE.0 && slope <= ALG_SLOPE_RANGE.1;
        if in_range && best.map_or(true, |(b, _)| (slope + 1.0).abs() < (b + 1.0).abs()) {
            best = Some((slope, Window { start: i, end: j, t_start: t[i], t_end: t[j] }));
        }
    }
    let r3 = log.radius().powi(3);
    Ok(RegimeFit {
        t1,
        t1_over_r3: t1 / r3,
        alg_slope: best.map(|(b, _)| b),
        exp_rate: rate,
        exp_r2: r2,
        alg_window: best.map(|(_, w)| w),
        exp_window: Window { start: s, end: n - 1, t_start: t[s], t_end: t[n - 1] },
    })
}

/// Cap on `max |c(t)| / sqrt(E(0) R)`.
pub const C_BARY: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarycenterReport {
    pub max_ratio: f64,
    pub cap: f64,
    pub pass: bool,
    /// Largest `|c'|^2 |Omega| / D` over interior rows.
    pub max_velocity_ratio: f64,
}

pub fn barycenter_monitor(log: &TrajectoryLog) -> BarycenterReport {
    let r = log.radius();
    let rows = &log.rows;
    let e0 = rows.first().map_or(0.0, |r| r.e);
    let max_bary = rows.iter().map(|r| r.bary).fold(0.0, f64::max);
    let max_ratio = if e0 > 0.0 { max_bary / (e0 * r).sqrt() } else if max_bary == 0.0 { 0.0 } else { f64::INFINITY };
    let area = PI * r * r;
    let mut max_velocity_ratio = 0.0_f64;
    for w in rows.windows(3) {
        if w[1].d <= 0.0 {
            continue;
        }
        let t = [w[0].t, w[1].t, w[2].t];
        let vx = lagrange_derivative(t, [w[0].center[0], w[1].center[0], w[2].center[0]]);
        let vy = lagrange_derivative(t, [w[0].center[1], w[1].center[1], w[2].center[1]]);
        max_velocity_ratio = max_velocity_ratio.max((vx * vx + vy * vy) * area / w[1].d);
    }
    BarycenterReport { max_ratio, cap: C_BARY, pass: max_ratio <= C_BARY, max_velocity_ratio }
}

/// Hypothesis bound on `|kappa - mean|_{L^1(Gamma)}`.
pub const EMBED_L1_MAX: f64 = 0.2;
/// Calibrated constant of the embedding margin.
pub const C_EMBED: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub l1_curvature_dev: f64,
    /// `|V|^2 4 kbar^2 / |V_s|^2`
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `|V|^2 / |V_s|^2` of a node field.
pub fn embedding_ratio(cache: &GeometryCache, v: &[f64]) -> Result<f64> {
    let n = velocity_norms(cache, v)?;
    Ok(n.l2 * n.l2 / (n.vs_l2 * n.vs_l2))
}

pub fn check_improved_embedding(cache: &GeometryCache, solve: &BieSolve) -> Result<EmbeddingReport> {
    let kbar = cache.mean_curvature();
    let dev: Vec<f64> = cache.kappa.iter().map(|k| (k - kbar).abs()).collect();
    let l1 = cache.integrate_ds(&dev);
    if l1 > EMBED_L1_MAX {
        return Err(Error::HypothesisFail(format!("|kappa - mean|_L1 = {l1} exceeds {EMBED_L1_MAX}")));
    }
    let r = cache.curve.radius();
    let cell = cache.curve.domain().half_edge().map_or(0.0, |l| (r / (2.0 * l)).powi(2));
    let ratio = embedding_ratio(cache, solve.velocity())? * 4.0 * kbar * kbar;
    let margin = C_EMBED * (l1 + cell);
    let bound = if margin < 1.0 { 1.0 / (1.0 - margin) } else { f64::INFINITY };
    Ok(EmbeddingReport { l1_curvature_dev: l1, ratio, bound, pass: ratio <= bound })
}

/// `|rho_phi|^2 / (R^4 |kappa - mean|^2)`, both norms in `L^2(dphi)`.
pub fn krummel_maggi_ratio(cache: &GeometryCache) -> f64 {
    let r = cache.curve.radius();
    let kbar = cache.mean_curvature();
    let num: f64 = cache.rho_phi.iter().map(|x| x * x).sum();
    let den: f64 = cache.kappa.iter().map(|k| (k - kbar).powi(2)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / (r.powi(4) * den)
    }
}

/// Diagnostics of a single curve without a trajectory.
pub fn static_record(curve: &RadialCurve, kernel: &crate::potential::Kernel) -> Result<DiagnosticsRecord> {
    let cache = build_cache(curve)?;
    let solve = crate::potential::solve_ms(&cache, kernel)?;
    let origin = barycenter_bulk(&cache);
    record(&cache, &solve, 0.0, None, origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cache, Domain};
    use crate::potential::{solve_ms, Kernel};

    fn single(k: usize, eps: f64) -> RadialCurve {
        RadialCurve::from_modes(1.0, 64, &[(k, eps, 0.0)], Domain::Plane)
            .and_then(|c| c.with_target_area())
            .unwrap()
    }

    #[test]
    fn circle_row_is_zero() {
        let c = RadialCurve::circle(1.0, 16, Domain::Plane).unwrap();
        let row = static_record(&c, &Kernel::Plane).unwrap();
        assert_eq!(row.e, 0.0);
        assert!(row.d.abs() < 1e-20 && row.eed == 0.0 && row.bary == 0.0);
    }

    #[test]
    fn linearized_e_and_d() {
        let eps = 1e-3;
        let row = static_record(&single(2, eps), &Kernel::Plane).unwrap();
        let e_lin = PI * eps * eps * 3.0 / 2.0;
        // E decays at twice the amplitude rate 12
        let d_lin = 24.0 * e_lin;
        assert!((row.e / e_lin - 1.0).abs() < 1e-2);
        assert!((row.d / d_lin - 1.0).abs() < 1e-2);
        assert_eq!(row.eed, row.e * row.e * row.d);
    }

    #[test]
    fn fuglede_single_mode() {
        let rep = check_fuglede(&single(2, 0.01)).unwrap();
        assert!(rep.hypotheses_ok && rep.pass);
        // deficit ~ 3 eps^2 / 4, upper = 3/5 * 2 eps^2
        assert!((rep.deficit / (0.75e-4) - 1.0).abs() < 0.02);
        let circle = check_fuglede(&RadialCurve::circle(2.0, 16, Domain::Plane).unwrap()).unwrap();
        assert!(circle.deficit.abs() < 1e-15 && circle.upper < 1e-25 && circle.pass);
    }

    #[test]
    fn embedding_equality_case() {
        let c = RadialCurve::circle(1.0, 32, Domain::Plane).unwrap();
        let g = build_cache(&c).unwrap();
        let v2: Vec<f64> = g.phi.iter().map(|p| (2.0 * p).cos()).collect();
        let v5: Vec<f64> = g.phi.iter().map(|p| (5.0 * p).cos()).collect();
        assert!((embedding_ratio(&g, &v2).unwrap() - 0.25).abs() < 1e-13);
        assert!((embedding_ratio(&g, &v5).unwrap() - 0.04).abs() < 1e-13);
        let c = single(3, 1e-3);
        let g = build_cache(&c).unwrap();
        let s = solve_ms(&g, &Kernel::Plane).unwrap();
        let rep = check_improved_embedding(&g, &s).unwrap();
        assert!(rep.pass && (rep.ratio - 4.0 / 9.0).abs() < 1e-2);
    }

    #[test]
    fn krummel_maggi_single_mode() {
        let g = build_cache(&single(3, 1e-4)).unwrap();
        assert!((krummel_maggi_ratio(&g) / (9.0 / 64.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn lagrange_is_exact_on_quadratics() {
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let t = [0.1, 0.25, 0.7];
        assert!((lagrange_derivative(t, t.map(f)) - (6.0 * 0.25 - 1.0)).abs() < 1e-12);
        let g = |t: f64| 2.0 * (-3.0 * t).exp();
        assert!((log_derivative(t, t.map(g)) + 3.0 * g(0.25)).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 1.5 - 0.25 * x).collect();
        let (s, r2) = linear_fit(&x, &y);
        assert!((s + 0.25).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
