//! Time integration of the Mullins-Sekerka flow in the frozen-pole radial
//! gauge: `rho_t = V ell / rho`, with periodic recentering and an exact
//! zero-mode area projection after every step.

use std::f64::consts::PI;

use serde::Serialize;

use crate::analysis::{record, DiagnosticsRecord};
use crate::config::{DtPolicy, Integrator, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    admissibility_from_cache, barycenter_bulk, build_cache_with, energy_gap, enclosed_area, GeometryCache,
    RadialCurve, ResolutionPolicy, RESOLUTION_WARN_RATIO,
};
use crate::potential::{dissipation, solve_ms, squared_distance, tangential_derivative_sq, BieSolve, Kernel};
use crate::spectral;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub curve: RadialCurve,
    pub t: f64,
    pub step_count: usize,
    pub last_dt: f64,
}

impl FlowState {
    pub fn new(curve: RadialCurve) -> Self {
        FlowState { curve, t: 0.0, step_count: 0, last_dt: 0.0 }
    }
}

/// Linear disk rate `2k(k^2 - 1)/R^3` of mode `k`.
pub fn disk_rate(k: usize, radius: f64) -> f64 {
    let kf = k as f64;
    2.0 * kf * (kf * kf - 1.0) / radius.powi(3)
}

/// Geometry, boundary solve and node velocity of one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cache: GeometryCache,
    pub solve: BieSolve,
    /// `rho_t` at the nodes.
    pub rho_t: Vec<f64>,
}

pub fn evaluate(curve: &RadialCurve, kernel: &Kernel, policy: &ResolutionPolicy) -> Result<Evaluation> {
    let cache = build_cache_with(curve, policy)?;
    let solve = solve_ms(&cache, kernel)?;
    let rho_t = solve.velocity().iter().zip(cache.ell.iter().zip(&cache.rho)).map(|(v, (l, r))| v * l / r).collect();
    Ok(Evaluation { cache, solve, rho_t })
}

/// `d rho / dt = V ell / rho` at the nodes.
pub fn rhs(curve: &RadialCurve, kernel: &Kernel) -> Result<Vec<f64>> {
    Ok(evaluate(curve, kernel, &ResolutionPolicy::default())?.rho_t)
}

/// Coefficient vector `[a_0..a_{N-1}, b_0..b_{N-1}]`.
fn pack(cos: &[f64], sin: &[f64]) -> Vec<f64> {
    cos.iter().chain(sin.iter()).cloned().collect()
}

fn unpack(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = u.len() / 2;
    (u[..n].to_vec(), u[n..].to_vec())
}

/// Stepper settings.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub kernel: Kernel,
    pub integrator: Integrator,
    pub policy: ResolutionPolicy,
    pub filter: f64,
    pub filter_order: u32,
}

/// Largest tolerated pre-projection area drift.
pub const AREA_DRIFT_REJECT: f64 = 1e-5;

/// Energy gap (in units of `R`) below which the accuracy limit on `dt` is
/// dropped; `E/D` is round-off there.
pub const ACCURACY_FLOOR: f64 = 1e-24;

/// Outcome of one accepted step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: FlowState,
    /// Relative area drift before projection.
    pub area_drift: f64,
}

impl Stepper {
    pub fn new(kernel: Kernel, integrator: Integrator) -> Self {
        Stepper { kernel, integrator, policy: ResolutionPolicy::default(), filter: 0.0, filter_order: 16 }
    }

    fn rates(&self, curve: &RadialCurve) -> Vec<f64> {
        let n = curve.n_modes();
        let r = curve.radius();
        let lam: Vec<f64> = (0..n).map(|k| if k < 2 { 0.0 } else { disk_rate(k, r) }).collect();
        pack(&lam, &lam)
    }

    /// Coefficients of `rho_t`; `first` reuses an evaluation of `u` itself.
    fn force(&self, template: &RadialCurve, u: &[f64]) -> Result<Vec<f64>> {
        let (cos, sin) = unpack(u);
        let curve = template.with_coefficients(cos, sin, template.pole()).map_err(stage_error)?;
        let ev = evaluate(&curve, &self.kernel, &self.policy)?;
        Ok(coefficients(&ev.rho_t, curve.n_modes()))
    }

    /// Advances by `dt`; `first` is the evaluation at the current state.
    pub fn step(&self, state: &FlowState, dt: f64, first: Option<&Evaluation>) -> Result<StepReport> {
        let curve = &state.curve;
        let n = curve.n_modes();
        let u = pack(curve.cos(), curve.sin());
        let f0 = match first {
            Some(ev) => coefficients(&ev.rho_t, n),
            None => self.force(curve, &u)?,
        };
        let next = match self.integrator {
            Integrator::Rk4 => {
                let k1 = f0;
                let k2 = self.force(curve, &axpy(&u, 0.5 * dt, &k1))?;
                let k3 = self.force(curve, &axpy(&u, 0.5 * dt, &k2))?;
                let k4 = self.force(curve, &axpy(&u, dt, &k3))?;
                (0..u.len()).map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect::<Vec<_>>()
            }
            Integrator::Ifrk4 => {
                let lam = self.rates(curve);
                let e_half: Vec<f64> = lam.iter().map(|l| (-l * 0.5 * dt).exp()).collect();
                let e_full: Vec<f64> = lam.iter().map(|l| (-l * dt).exp()).collect();
                let nl = |f: Vec<f64>, v: &[f64]| -> Vec<f64> { f.iter().zip(v).zip(&lam).map(|((f, v), l)| f + l * v).collect() };
                let scale = |e: &[f64], v: &[f64]| -> Vec<f64> { e.iter().zip(v).map(|(e, v)| e * v).collect() };
                let k1 = nl(f0, &u);
                let u2 = scale(&e_half, &axpy(&u, 0.5 * dt, &k1));
                let k2 = nl(self.force(curve, &u2)?, &u2);
                let u3 = axpy(&scale(&e_half, &u), 0.5 * dt, &k2);
                let k3 = nl(self.force(curve, &u3)?, &u3);
                let u4 = axpy(&scale(&e_full, &u), dt, &scale(&e_half, &k3));
                let k4 = nl(self.force(curve, &u4)?, &u4);
                (0..u.len())
                    .map(|i| {
                        e_full[i] * u[i]
                            + dt / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i])
                    })
                    .collect()
            }
        };
        let (mut cos, mut sin) = unpack(&next);
        if self.filter > 0.0 {
            for k in 0..n {
                let s = (-self.filter * (k as f64 / n as f64).powi(self.filter_order as i32)).exp();
                cos[k] *= s;
                sin[k] *= s;
            }
        }
        let r = curve.radius();
        let target = PI * r * r;
        let rest: f64 = (1..n).map(|k| cos[k].powi(2) + sin[k].powi(2)).sum();
        let area = PI * (cos[0].powi(2) + 0.5 * rest);
        let area_drift = (area - target).abs() / target;
        if area_drift > AREA_DRIFT_REJECT {
            return Err(Error::StepRejected(format!("area drift {area_drift:e} before projection")));
        }
        cos[0] = project_zero_mode(r, rest)?;
        let curve = curve.with_coefficients(cos, sin, curve.pole()).map_err(stage_error)?;
        Ok(StepReport {
            state: FlowState { curve, t: state.t + dt, step_count: state.step_count + 1, last_dt: dt },
            area_drift,
        })
    }
}

fn stage_error(e: Error) -> Error {
    match e {
        Error::NonPositiveRadius { node, value } => {
            Error::StepRejected(format!("rho = {value:e} at node {node} during a stage"))
        }
        Error::OutsideCell { .. } | Error::InvalidCurve(_) => Error::StepRejected(e.to_string()),
        other => other,
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| x + a * y).collect()
}

fn coefficients(nodes: &[f64], n: usize) -> Vec<f64> {
    let (a, b) = spectral::analyze(nodes, n);
    pack(&a, &b)
}

/// Zero mode giving area `pi R^2` for the given `sum_{k>0} (a_k^2 + b_k^2)`.
fn project_zero_mode(radius: f64, rest: f64) -> Result<f64> {
    let s = radius * radius - 0.5 * rest;
    if s <= 0.0 {
        return Err(Error::StepRejected("area projection impossible".into()));
    }
    Ok(s.sqrt())
}

/// Tolerance of the ray-intersection Newton iteration.
pub const RECENTER_TOL: f64 = 1e-13;

/// Moves the pole to the bulk barycenter and re-derives `rho` about it.
pub fn recenter(state: &FlowState) -> Result<FlowState> {
    let curve = &state.curve;
    let cache = build_cache_with(curve, &ResolutionPolicy { abort_ratio: f64::INFINITY })?;
    let c = barycenter_bulk(&cache);
    let pole = curve.pole();
    let shift = (c[0] - pole[0]).hypot(c[1] - pole[1]);
    if shift >= 0.2 * curve.radius() {
        return Err(Error::RecenterFail(format!("barycenter {shift:e} away from the pole")));
    }
    let m = curve.n_nodes();
    let thetas = spectral::nodes(m);
    let mut r_new = Vec::with_capacity(m);
    for &theta in &thetas {
        let (st, ct) = theta.sin_cos();
        let mut phi = theta;
        let mut converged = false;
        for _ in 0..60 {
            let (rho, rp, _) = curve.evaluate(phi);
            let (sp, cp) = phi.sin_cos();
            let x = [pole[0] + rho * cp - c[0], pole[1] + rho * sp - c[1]];
            let dx = [rp * cp - rho * sp, rp * sp + rho * cp];
            let g = x[0] * st - x[1] * ct;
            let dg = dx[0] * st - dx[1] * ct;
            if dg == 0.0 {
                break;
            }
            let step = g / dg;
            phi -= step;
            if step.abs() < RECENTER_TOL {
                converged = true;
                break;
            }
        }
        let (rho, _, _) = curve.evaluate(phi);
        let (sp, cp) = phi.sin_cos();
        let r = (pole[0] + rho * cp - c[0]) * ct + (pole[1] + rho * sp - c[1]) * st;
        if !converged || !(r > 0.0) {
            return Err(Error::RecenterFail(format!("ray at theta = {theta} misses the curve")));
        }
        r_new.push(r);
    }
    let n = curve.n_modes();
    let (mut cos, sin) = spectral::analyze(&r_new, n);
    let rest: f64 = (1..n).map(|k| cos[k].powi(2) + sin[k].powi(2)).sum();
    cos[0] = project_zero_mode(curve.radius(), rest).map_err(|e| Error::RecenterFail(e.to_string()))?;
    let curve = curve.with_coefficients(cos, sin, c).map_err(|e| Error::RecenterFail(e.to_string()))?;
    Ok(FlowState { curve, ..state.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunStatus {
    Completed,
    EnergyStop,
    MaxSteps,
    Halted(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
    pub n_modes: usize,
    pub radius: f64,
    pub dt_policy: String,
}

/// One line of `run.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub step: usize,
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub meta: RunMeta,
    pub rows: Vec<DiagnosticsRecord>,
    pub events: Vec<Event>,
    pub status: RunStatus,
    /// Largest relative area drift before projection over accepted steps.
    pub max_area_drift: f64,
    /// Largest relative area error after projection.
    pub max_area_error: f64,
    pub steps: usize,
    pub rejections: usize,
    pub final_curve: Option<RadialCurve>,
}

impl TrajectoryLog {
    /// Log rebuilt from stored rows (e.g. a parsed `trajectory.csv`).
    pub fn from_rows(meta: RunMeta, rows: Vec<DiagnosticsRecord>) -> Self {
        TrajectoryLog {
            meta,
            rows,
            events: Vec::new(),
            status: RunStatus::Completed,
            max_area_drift: 0.0,
            max_area_error: 0.0,
            steps: 0,
            rejections: 0,
            final_curve: None,
        }
    }

    pub fn radius(&self) -> f64 {
        self.meta.radius
    }
}

/// Integrates the configured flow; runtime failures end the log with a
/// `Halted` status instead of an error.
pub fn run(config: &RunConfig) -> Result<TrajectoryLog> {
    config.validate()?;
    let curve = config.initial_curve()?;
    run_from(config, curve)
}

/// Independent runs on the rayon pool; results keep the input order.
pub fn run_batch(configs: &[RunConfig]) -> Vec<Result<TrajectoryLog>> {
    use rayon::prelude::*;
    configs.par_iter().map(run).collect()
}

pub fn run_from(config: &RunConfig, curve: RadialCurve) -> Result<TrajectoryLog> {
    let kernel = Kernel::for_domain(curve.domain());
    let mut stepper = Stepper::new(kernel, config.integrator);
    stepper.policy = ResolutionPolicy { abort_ratio: config.resolution_abort };
    stepper.filter = config.filter;
    stepper.filter_order = config.filter_order;
    let scale = config.time_scale();
    let t_end = config.t_end * scale;
    let dt_max = config.dt0 * scale;
    let radius = curve.radius();
    let n = curve.n_modes();
    let top_rate = disk_rate(n - 1, radius);

    let mut log = TrajectoryLog {
        meta: RunMeta {
            config_hash: config.hash(),
            seed: config.seed,
            n_modes: n,
            radius,
            dt_policy: format!(
                "{:?}/{:?}: dt = min(dt0, c_acc min(E/D, D/(2|V_s|^2)), stability) with c_acc = {}, c_cfl = {}",
                config.integrator, config.dt_policy, config.c_acc, config.c_cfl
            ),
        },
        rows: Vec::new(),
        events: Vec::new(),
        status: RunStatus::Completed,
        max_area_drift: 0.0,
        max_area_error: 0.0,
        steps: 0,
        rejections: 0,
        final_curve: None,
    };
    let event = |log: &mut TrajectoryLog, state: &FlowState, kind: &str, detail: String| {
        log.events.push(Event { step: state.step_count, t: state.t, kind: kind.into(), detail });
    };

    let mut state = FlowState::new(curve);
    let msg = format!("config {}", log.meta.config_hash);
    event(&mut log, &state, "start", msg);
    match recenter(&state) {
        Ok(s) => state = s,
        Err(e) => {
            log.status = RunStatus::Halted(e.to_string());
            event(&mut log, &state, "halt", e.to_string());
            return Ok(log);
        }
    }
    let origin = barycenter_bulk(&build_cache_with(&state.curve, &stepper.policy)?);
    let mut dt_factor = 1.0_f64;
    let mut streak = 0usize;
    let mut records = 0usize;
    let mut warned = false;

    loop {
        let ev = match evaluate(&state.curve, &stepper.kernel, &stepper.policy) {
            Ok(ev) => ev,
            Err(e) => {
                log.status = RunStatus::Halted(e.to_string());
                event(&mut log, &state, "halt", e.to_string());
                break;
            }
        };
        if !warned && state.curve.resolution_ratio() > RESOLUTION_WARN_RATIO {
            warned = true;
            event(&mut log, &state, "warning", format!("top-mode ratio {:e}", state.curve.resolution_ratio()));
        }
        let e_now = energy_gap(&ev.cache);
        let d_now = match dissipation(&ev.cache, &ev.solve) {
            Ok(d) => d,
            Err(e) => {
                log.status = RunStatus::Halted(e.to_string());
                event(&mut log, &state, "halt", e.to_string());
                break;
            }
        };
        let area_err = (enclosed_area(&ev.cache) / (PI * radius * radius) - 1.0).abs();
        log.max_area_error = log.max_area_error.max(area_err);

        let done_time = state.t >= t_end * (1.0 - 1e-12);
        let done_energy = config.e_stop > 0.0 && e_now < config.e_stop;
        let done_steps = state.step_count >= config.max_steps;
        let done = done_time || done_energy || done_steps;
        if state.step_count % config.k_out == 0 || done {
            let h = if config.k_h > 0 && records % config.k_h == 0 {
                let c = barycenter_bulk(&ev.cache);
                match squared_distance(&state.curve, c, config.grid) {
                    Ok(sd) => {
                        if sd.grid_too_coarse && records == 0 {
                            event(&mut log, &state, "warning", "H grid too coarse for the interface band".into());
                        }
                        Some(sd.h)
                    }
                    Err(e) => {
                        event(&mut log, &state, "warning", format!("H failed: {e}"));
                        None
                    }
                }
            } else {
                None
            };
            match record(&ev.cache, &ev.solve, state.t, h, origin) {
                Ok(row) => log.rows.push(row),
                Err(e) => {
                    log.status = RunStatus::Halted(e.to_string());
                    event(&mut log, &state, "halt", e.to_string());
                    break;
                }
            }
            records += 1;
        }
        if done {
            log.status = if done_time {
                RunStatus::Completed
            } else if done_energy {
                RunStatus::EnergyStop
            } else {
                RunStatus::MaxSteps
            };
            break;
        }

        let rep = admissibility_from_cache(&ev.cache, config.delta);
        let dt_base = match config.dt_policy {
            DtPolicy::Fixed => dt_max,
            DtPolicy::Adaptive => {
                let vs2 = tangential_derivative_sq(&ev.cache, ev.solve.velocity());
                let acc = if d_now > 0.0 && e_now > ACCURACY_FLOOR * config.radius {
                    config.c_acc * (e_now / d_now).min(d_now / (2.0 * vs2))
                } else {
                    dt_max
                };
                let stab = match config.integrator {
                    Integrator::Ifrk4 => 2.8 / (3.0 * rep.annulus.max(1e-300) * top_rate),
                    Integrator::Rk4 => config.c_cfl * 2.78 / top_rate,
                };
                dt_max.min(acc).min(stab)
            }
        };
        let dt = (dt_base * dt_factor).min(t_end - state.t);
        match stepper.step(&state, dt, Some(&ev)) {
            Ok(rep) => {
                log.max_area_drift = log.max_area_drift.max(rep.area_drift);
                state = rep.state;
                log.steps += 1;
                streak += 1;
                if streak >= 5 && dt_factor < 1.0 {
                    dt_factor = (2.0 * dt_factor).min(1.0);
                    streak = 0;
                }
            }
            Err(Error::StepRejected(msg)) => {
                log.rejections += 1;
                streak = 0;
                dt_factor *= 0.5;
                event(&mut log, &state, "step_rejected", format!("dt = {dt:e}: {msg}"));
                if dt_factor < 1e-6 {
                    log.status = RunStatus::Halted(format!("step size collapsed: {msg}"));
                    event(&mut log, &state, "halt", "rejection streak".into());
                    break;
                }
                continue;
            }
            Err(e) => {
                log.status = RunStatus::Halted(e.to_string());
                event(&mut log, &state, "halt", e.to_string());
                break;
            }
        }
        if state.step_count % config.k_rec == 0 {
            match recenter(&state) {
                Ok(s) => state = s,
                Err(e) => {
                    log.status = RunStatus::Halted(e.to_string());
                    event(&mut log, &state, "halt", e.to_string());
                    break;
                }
            }
        }
    }
    let msg = format!("{:?} after {} steps", log.status, log.steps);
    event(&mut log, &state, "finish", msg);
    log.final_curve = Some(state.curve);
    Ok(log)
}
