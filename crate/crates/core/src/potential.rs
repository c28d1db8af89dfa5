//! Single-layer boundary integral solver for the harmonic extension of
//! curvature, plus the derived dissipation and `H^{-1}` distance.
//!
//! The kernel is `(1/2pi) log|x - y|` on the plane and `(1/2pi) Lambda(x - y)`
//! on the torus. The bordered system `S[phi] + c = kappa`, `int phi ds = 0`
//! yields the jump of normal derivatives `phi = du_out/dn - du_in/dn`, which
//! is the normal velocity.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{lambda, lambda_regular, LatticeKernel};
use crate::error::{Error, Result};
use crate::geometry::{Domain, GeometryCache, RadialCurve};
use crate::sobolev;
use crate::spectral;

/// Fundamental solution used by the single-layer operator.
#[derive(Debug, Clone)]
pub enum Kernel {
    Plane,
    Lattice(LatticeKernel),
}

impl Kernel {
    pub fn for_domain(domain: Domain) -> Self {
        match domain {
            Domain::Plane => Kernel::Plane,
            Domain::Torus { half_edge } => Kernel::Lattice(LatticeKernel::new(half_edge)),
        }
    }

    /// `log|z|`-normalized kernel value minus `log|z|`; zero on the plane.
    fn regular(&self, z: Complex64) -> f64 {
        match self {
            Kernel::Plane => 0.0,
            Kernel::Lattice(k) => lambda_regular(k, z),
        }
    }
}

/// Node values of the jump density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerDensity {
    pub values: Vec<f64>,
    /// `int phi ds` after the solve.
    pub mean_constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BieSolve {
    pub density: LayerDensity,
    pub additive_constant: f64,
    /// Relative residual of the bordered system.
    pub residual_norm: f64,
}

impl BieSolve {
    /// Normal velocity at the nodes.
    pub fn velocity(&self) -> &[f64] {
        &self.density.values
    }
}

/// Weights of `int_0^{2pi} log(4 sin^2((t - tau)/2)) f(tau) dtau` at node
/// offset `d = i - j` on an `m`-point grid.
fn log_weights(m: usize) -> Vec<f64> {
    let n = m / 2;
    let nf = n as f64;
    (0..m)
        .map(|d| {
            let t = 2.0 * PI * d as f64 / m as f64;
            let s: f64 = (1..n).map(|k| (k as f64 * t).cos() / k as f64).sum();
            -(2.0 * PI / nf) * s - (PI / (nf * nf)) * (nf * t).cos()
        })
        .collect()
}

/// Nystrom matrix of the single-layer operator at the curve nodes.
pub fn assemble(cache: &GeometryCache, kernel: &Kernel) -> DMatrix<f64> {
    let m = cache.n_nodes();
    let weights = log_weights(m);
    let h = 2.0 * PI / m as f64;
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let xi = cache.points[i];
            (0..m)
                .map(|j| {
                    let k2 = if i == j {
                        cache.ell[i].ln()
                    } else {
                        let z = Complex64::new(xi[0] - cache.points[j][0], xi[1] - cache.points[j][1]);
                        let half = 0.5 * (cache.phi[i] - cache.phi[j]);
                        (z.norm() / (2.0 * half.sin()).abs()).ln() + kernel.regular(z)
                    };
                    let d = (i + m - j) % m;
                    (0.5 * weights[d] + h * k2) * cache.ell[j] / (2.0 * PI)
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(m, m, |i, j| rows[i][j])
}

fn bordered(cache: &GeometryCache, kernel: &Kernel) -> DMatrix<f64> {
    let m = cache.n_nodes();
    let s = assemble(cache, kernel);
    let h = 2.0 * PI / m as f64;
    let mut a = DMatrix::zeros(m + 1, m + 1);
    a.view_mut((0, 0), (m, m)).copy_from(&s);
    for i in 0..m {
        a[(i, m)] = 1.0;
        a[(m, i)] = h * cache.ell[i];
    }
    a
}

/// Condition number of the bordered system (SVD).
pub fn condition_number(cache: &GeometryCache, kernel: &Kernel) -> f64 {
    let sv = bordered(cache, kernel).singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Solves `S[phi] + c = g`, `int phi ds = 0` for arbitrary node data `g`.
pub fn solve_with_data(cache: &GeometryCache, kernel: &Kernel, data: &[f64]) -> Result<BieSolve> {
    let m = cache.n_nodes();
    assert_eq!(data.len(), m);
    let a = bordered(cache, kernel);
    let mut rhs = DVector::zeros(m + 1);
    for i in 0..m {
        rhs[i] = data[i];
    }
    let x = a.clone().lu().solve(&rhs);
    let x = match x {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => return Err(Error::SolverSingular { condition: condition_number(cache, kernel) }),
    };
    let residual = (&a * &x - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    let values: Vec<f64> = x.iter().take(m).cloned().collect();
    let mean_constraint_residual = cache.integrate_ds(&values);
    Ok(BieSolve {
        density: LayerDensity { values, mean_constraint_residual },
        additive_constant: x[m],
        residual_norm: residual,
    })
}

/// Mullins-Sekerka normal velocity: density for curvature data.
pub fn solve_ms(cache: &GeometryCache, kernel: &Kernel) -> Result<BieSolve> {
    solve_with_data(cache, kernel, &cache.kappa)
}

/// Dissipation tolerance relative to `int |kappa V| ds`.
pub const DISSIPATION_TOL: f64 = 1e-10;

/// `D = -int kappa V ds`, computed against `kappa - mean` to avoid cancellation.
pub fn dissipation(cache: &GeometryCache, solve: &BieSolve) -> Result<f64> {
    let v = solve.velocity();
    let kbar = cache.mean_curvature();
    let prod: Vec<f64> = cache.kappa.iter().zip(v).map(|(k, v)| (k - kbar) * v).collect();
    let d = -cache.integrate_ds(&prod);
    let scale = cache.integrate_ds(&prod.iter().map(|p| p.abs()).collect::<Vec<_>>());
    if d < -DISSIPATION_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NegativeDissipation { value: d });
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityNorms {
    /// `|V|_{L^2(Gamma)}`
    pub l2: f64,
    /// `|V_s|_{L^2(Gamma)}`
    pub vs_l2: f64,
    /// `|V|_{H^{-1/2}(Gamma)}`
    pub h_minus_half: f64,
}

/// Norms of a node field on the curve; `V_s = V_phi / ell`.
pub fn velocity_norms(cache: &GeometryCache, v: &[f64]) -> Result<VelocityNorms> {
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    Ok(VelocityNorms {
        l2: cache.integrate_ds(&sq).sqrt(),
        vs_l2: tangential_derivative_sq(cache, v).sqrt(),
        h_minus_half: sobolev::curve_norm(cache, v, -0.5)?,
    })
}

/// `|f_s|^2_{L^2(Gamma)}` of a node field.
pub fn tangential_derivative_sq(cache: &GeometryCache, f: &[f64]) -> f64 {
    let df = spectral::derivative(f, 1);
    df.iter().zip(&cache.ell).map(|(d, l)| d * d / l).sum::<f64>() * cache.dphi()
}

pub fn normal_velocity_sobolev(cache: &GeometryCache, solve: &BieSolve) -> Result<VelocityNorms> {
    velocity_norms(cache, solve.velocity())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub interior: f64,
    pub exterior: f64,
    /// `|g_k|_{H^{1/2}(S^1)}^2`
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceTable {
    pub rows: Vec<TraceRow>,
    pub total_interior: f64,
    pub total_exterior: f64,
    pub total_boundary: f64,
}

impl TraceTable {
    pub fn max_mismatch(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.interior - r.boundary).abs().max((r.exterior - r.boundary).abs()))
            .chain([
                (self.total_interior - self.total_boundary).abs(),
                (self.total_exterior - self.total_boundary).abs(),
            ])
            .fold(0.0, f64::max)
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, t);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                w[i] = 1.0 / ((1.0 - t * t) * dq * dq);
                break;
            }
        }
        x[i] = 0.5 * (1.0 - t);
    }
    (x, w)
}

/// Dirichlet energies of the harmonic extensions of
/// `g = sum a_k cos k phi + b_k sin k phi` into the unit disk and its
/// complement, against `|g|_{H^{1/2}}^2`. Gradients are integrated with
/// Gauss-Legendre in the radius (exterior after `r = 1/s`) and the
/// trapezoid rule in angle.
pub fn trace_equality_disk(cos: &[f64], sin: &[f64], k_max: usize) -> TraceTable {
    let k_top = k_max.min(cos.len().saturating_sub(1));
    let (rs, rw) = gauss_legendre01(k_top + 8);
    let m = 4 * (k_top + 1);
    let phis = spectral::nodes(m);
    let dphi = 2.0 * PI / m as f64;

    // energy of a field with radial profiles f_k(r) and derivative f_k'(r)
    let energy = |modes: &[(usize, f64, f64)], exterior: bool| -> f64 {
        let mut total = 0.0;
        for (&s, &ws) in rs.iter().zip(&rw) {
            // interior: r = s; exterior: r = 1/s, dr = ds / s^2
            let (r, jac) = if exterior { (1.0 / s, 1.0 / (s * s)) } else { (s, 1.0) };
            for &phi in &phis {
                let (mut ur, mut ut) = (0.0, 0.0);
                for &(k, a, b) in modes {
                    let kf = k as f64;
                    let (prof, dprof) = if exterior {
                        (r.powf(-kf), -kf * r.powf(-kf - 1.0))
                    } else {
                        (r.powf(kf), kf * r.powf(kf - 1.0))
                    };
                    let (sk, ck) = (kf * phi).sin_cos();
                    ur += dprof * (a * ck + b * sk);
                    ut += prof * kf * (-a * sk + b * ck) / r;
                }
                total += ws * dphi * jac * r * (ur * ur + ut * ut);
            }
        }
        total
    };

    let mut rows = Vec::new();
    let mut all = Vec::new();
    for k in 1..=k_top {
        let (a, b) = (cos[k], sin.get(k).cloned().unwrap_or(0.0));
        let mode = [(k, a, b)];
        all.push((k, a, b));
        let mut c = vec![0.0; k + 1];
        let mut s = vec![0.0; k + 1];
        c[k] = a;
        s[k] = b;
        let boundary = sobolev::h_norm(&sobolev::PeriodicSignal::from_cos_sin(&c, &s, PI), 0.5)
            .expect("positive order")
            .powi(2);
        rows.push(TraceRow { k, interior: energy(&mode, false), exterior: energy(&mode, true), boundary });
    }
    let mut c = cos[..=k_top].to_vec();
    let mut s: Vec<f64> = (0..=k_top).map(|k| sin.get(k).cloned().unwrap_or(0.0)).collect();
    c[0] = 0.0;
    s[0] = 0.0;
    let total_boundary =
        sobolev::h_norm(&sobolev::PeriodicSignal::from_cos_sin(&c, &s, PI), 0.5).expect("positive order").powi(2);
    TraceTable {
        rows,
        total_interior: energy(&all, false),
        total_exterior: energy(&all, true),
        total_boundary,
    }
}

/// A region whose indicator is rasterized for `H`.
#[derive(Debug, Clone)]
pub enum Region {
    Curve(RadialCurve),
    Disk { center: [f64; 2], radius: f64 },
}

/// Default rasterization grid per edge.
pub const DEFAULT_GRID: usize = 512;
/// Subcells per cell edge near the interface.
pub const SUBCELLS: usize = 4;

struct RadialTable {
    pole: [f64; 2],
    rho: Vec<f64>,
    slope: Vec<f64>,
}

impl RadialTable {
    fn new(curve: &RadialCurve) -> Self {
        let m = 8 * curve.n_nodes();
        let base = curve.node_values();
        let rho = spectral::upsample(&base, m);
        let slope = spectral::upsample(&spectral::derivative(&base, 1), m);
        RadialTable { pole: curve.pole(), rho, slope }
    }

    /// Approximate signed distance (positive outside).
    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (p[0] - self.pole[0], p[1] - self.pole[1]);
        let r = dx.hypot(dy);
        let m = self.rho.len();
        let t = dy.atan2(dx).rem_euclid(2.0 * PI) / (2.0 * PI) * m as f64;
        let j = (t.floor() as usize) % m;
        let f = t - t.floor();
        let lerp = |v: &[f64]| (1.0 - f) * v[j] + f * v[(j + 1) % m];
        let rho = lerp(&self.rho);
        let slope = lerp(&self.slope);
        (r - rho) * rho / rho.hypot(slope)
    }
}

fn region_distance(region: &Region, table: Option<&RadialTable>, p: [f64; 2], half_edge: f64) -> f64 {
    match region {
        Region::Curve(_) => table.expect("table for curve").signed_distance(p),
        Region::Disk { center, radius } => {
            let wrap = |x: f64| x - 2.0 * half_edge * (x / (2.0 * half_edge)).round();
            wrap(p[0] - center[0]).hypot(wrap(p[1] - center[1])) - radius
        }
    }
}

/// Cell-averaged indicator of `region` on a `grid x grid` partition of
/// `[-L, L)^2`, anti-aliased by `4 x 4` subcells with linear coverage.
pub fn rasterize(region: &Region, half_edge: f64, grid: usize) -> Vec<f64> {
    let table = match region {
        Region::Curve(c) => Some(RadialTable::new(c)),
        Region::Disk { .. } => None,
    };
    let h = 2.0 * half_edge / grid as f64;
    let hs = h / SUBCELLS as f64;
    (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            let cx = -half_edge + (i as f64 + 0.5) * h;
            let cy = -half_edge + (j as f64 + 0.5) * h;
            let d = region_distance(region, table.as_ref(), [cx, cy], half_edge);
            if d > h {
                return 0.0;
            }
            if d < -h {
                return 1.0;
            }
            let mut acc = 0.0;
            for a in 0..SUBCELLS {
                for b in 0..SUBCELLS {
                    let p = [
                        cx - 0.5 * h + (a as f64 + 0.5) * hs,
                        cy - 0.5 * h + (b as f64 + 0.5) * hs,
                    ];
                    let ds = region_distance(region, table.as_ref(), p, half_edge);
                    acc += (0.5 - ds / hs).clamp(0.0, 1.0);
                }
            }
            acc / (SUBCELLS * SUBCELLS) as f64
        })
        .collect()
}

/// Removes the cell mean.
pub fn project_mean(f: &mut [f64]) {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    f.iter_mut().for_each(|v| *v -= mean);
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `|f|_{H^{-1}}^2` of the piecewise-constant field with cell values `f` on
/// the torus `[-L, L)^2`: `sum_{k != 0} |f^(k)|^2 / |k|^2`, with the exact
/// cell transform `f^(k) = (h^2/2L) sinc(k_x h/2) sinc(k_y h/2) DFT(f)` and
/// aliases summed up to `|j| <= 8`.
pub fn h_minus_one_fft(f: &[f64], half_edge: f64, grid: usize) -> f64 {
    assert_eq!(f.len(), grid * grid);
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for row in buf.chunks_mut(grid) {
        spectral::fft_in_place(row, false);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); grid];
    for j in 0..grid {
        for i in 0..grid {
            col[i] = buf[i * grid + j];
        }
        spectral::fft_in_place(&mut col, false);
        for i in 0..grid {
            buf[i * grid + j] = col[i];
        }
    }
    let h = 2.0 * half_edge / grid as f64;
    let weights = alias_weights(half_edge, grid);
    let scale = h.powi(4) / (4.0 * half_edge * half_edge);
    scale * buf.iter().zip(weights.iter()).map(|(c, w)| c.norm_sqr() * w).sum::<f64>()
}

type WeightCache = Mutex<HashMap<(usize, u64), Arc<Vec<f64>>>>;

/// `sum_j sinc^2(q_x h/2) sinc^2(q_y h/2) / |q|^2` over the aliases
/// `q = k + j 2pi/h`, per FFT slot; zero at the origin. Cached per grid.
fn alias_weights(half_edge: f64, grid: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<WeightCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (grid, half_edge.to_bits());
    if let Some(w) = cache.lock().expect("weight cache").get(&key) {
        return w.clone();
    }
    let h = 2.0 * half_edge / grid as f64;
    let base = PI / half_edge;
    let alias = 2.0 * PI / h;
    const A: i32 = 8;
    let signed = |i: usize| if 2 * i < grid { i as f64 } else { i as f64 - grid as f64 };
    // per axis: aliased wavenumbers and their sinc^2 factors
    let axis: Vec<Vec<(f64, f64)>> = (0..grid)
        .map(|i| {
            let k = base * signed(i);
            (-A..=A)
                .map(|a| {
                    let q = k + a as f64 * alias;
                    (q * q, sinc(q * h / 2.0).powi(2))
                })
                .collect()
        })
        .collect();
    let w: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            let mut s = 0.0;
            for &(qx2, sx) in &axis[i] {
                for &(qy2, sy) in &axis[j] {
                    let q2 = qx2 + qy2;
                    if q2 > 0.0 {
                        s += sx * sy / q2;
                    }
                }
            }
            s
        })
        .collect();
    let w = Arc::new(w);
    cache.lock().expect("weight cache").insert(key, w.clone());
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquaredDistance {
    pub h: f64,
    pub half_edge: f64,
    pub grid: usize,
    /// Interface band narrower than four cells.
    pub grid_too_coarse: bool,
}

/// Half edge of the torus that hosts `H` for a given curve.
pub fn h_cell(curve: &RadialCurve) -> f64 {
    match curve.domain() {
        Domain::Plane => 8.0 * curve.radius(),
        Domain::Torus { half_edge } => half_edge,
    }
}

/// Squared `H^{-1}` distance between the enclosed region and the disk of
/// radius `R` centered at `center`.
pub fn squared_distance(curve: &RadialCurve, center: [f64; 2], grid: usize) -> Result<SquaredDistance> {
    let half_edge = h_cell(curve);
    let disk = Region::Disk { center, radius: curve.radius() };
    let mut out = squared_distance_regions(&Region::Curve(curve.clone()), &disk, half_edge, grid);
    let r = curve.radius();
    let band = curve.node_values().iter().map(|x| (x - r).abs()).fold(0.0, f64::max)
        + (center[0] - curve.pole()[0]).hypot(center[1] - curve.pole()[1]);
    out.grid_too_coarse = band < 4.0 * 2.0 * half_edge / grid as f64;
    Ok(out)
}

pub fn squared_distance_regions(a: &Region, b: &Region, half_edge: f64, grid: usize) -> SquaredDistance {
    let f = difference_field(a, b, half_edge, grid);
    SquaredDistance { h: h_minus_one_fft(&f, half_edge, grid), half_edge, grid, grid_too_coarse: false }
}

/// Mean-free `chi_a - chi_b` on the grid.
pub fn difference_field(a: &Region, b: &Region, half_edge: f64, grid: usize) -> Vec<f64> {
    let fa = rasterize(a, half_edge, grid);
    let fb = rasterize(b, half_edge, grid);
    let mut f: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
    project_mean(&mut f);
    f
}

/// Cell-pair averages `(1/h^4) int_cell int_cell' G(x - y)` of the periodic
/// Green function `G = -Lambda/(2pi)` by grid offset.
fn green_cell_table(kernel: &LatticeKernel, grid: usize) -> Vec<f64> {
    let l = kernel.half_edge();
    let h = 2.0 * l / grid as f64;
    let (gx, gw) = gauss_legendre01(24);
    let green = |z: Complex64| -> f64 {
        match lambda(kernel, z) {
            Ok(v) => -v / (2.0 * PI),
            Err(_) => 0.0,
        }
    };
    // Duffy rule on [0,h]^2 with the singular corner at the origin of the
    // local frame (sx, sy) -> corner + (sx, sy) * orientation.
    let quadrant = |offset: Complex64, ox: f64, oy: f64| -> f64 {
        // tent weight (1 - |s_x|/h)(1 - |s_y|/h) / h^2 over [0,h]^2 in direction (ox, oy)
        let mut acc = 0.0;
        // choose the quadrant corner closest to the singular point -offset
        let corners = [(0.0, 0.0), (h, 0.0), (0.0, h), (h, h)];
        let sing = Complex64::new(-offset.re * ox, -offset.im * oy);
        let (c0x, c0y) = corners
            .iter()
            .cloned()
            .min_by(|a, b| {
                let da = (a.0 - sing.re).hypot(a.1 - sing.im);
                let db = (b.0 - sing.re).hypot(b.1 - sing.im);
                da.total_cmp(&db)
            })
            .unwrap();
        let (dx, dy) = (if c0x == 0.0 { 1.0 } else { -1.0 }, if c0y == 0.0 { 1.0 } else { -1.0 });
        for tri in 0..2 {
            for (&u, &wu) in gx.iter().zip(&gw) {
                for (&v, &wv) in gx.iter().zip(&gw) {
                    let (a, b) = if tri == 0 { (h * u, h * u * v) } else { (h * u * v, h * u) };
                    let sx = c0x + dx * a;
                    let sy = c0y + dy * b;
                    let w = (1.0 - sx / h) * (1.0 - sy / h) / (h * h);
                    let z = offset + Complex64::new(ox * sx, oy * sy);
                    acc += wu * wv * h * h * u * w * green(z);
                }
            }
        }
        acc
    };
    let signed = |i: usize| if 2 * i < grid { i as i64 } else { i as i64 - grid as i64 };
    (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (signed(idx / grid), signed(idx % grid));
            let offset = Complex64::new(i as f64 * h, j as f64 * h);
            if i.abs().max(j.abs()) <= 3 {
                [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
                    .iter()
                    .map(|&(ox, oy)| quadrant(offset, ox, oy))
                    .sum()
            } else {
                // tent second moments h^2/6 per axis; Delta G = 1/(4L^2) off the pole
                green(offset) + h * h / 12.0 / (4.0 * l * l)
            }
        })
        .collect()
}

/// Direct double sum `h^4 sum_i sum_j f_i f_j G~(i - j)` with cell-averaged
/// periodic Green function; an independent route to [`h_minus_one_fft`].
pub fn h_minus_one_direct(f: &[f64], kernel: &LatticeKernel, grid: usize) -> f64 {
    let table = green_cell_table(kernel, grid);
    let h = 2.0 * kernel.half_edge() / grid as f64;
    let n = grid * grid;
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|a| {
            let (ai, aj) = (a / grid, a % grid);
            if f[a] == 0.0 {
                return 0.0;
            }
            let mut s = 0.0;
            for b in 0..n {
                let (bi, bj) = (b / grid, b % grid);
                let di = (ai + grid - bi) % grid;
                let dj = (aj + grid - bj) % grid;
                s += f[b] * table[di * grid + dj];
            }
            f[a] * s
        })
        .sum();
    h.powi(4) * total
}
