//! Polar-graph curves around a pole and their node-wise geometry.
//!
//! A curve is `pole + rho(phi) (cos phi, sin phi)` with `rho` a real
//! trigonometric series of `N` modes. All node quantities live on the
//! `M = 2N` uniform grid; derivatives are taken in coefficient space.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Ambient manifold of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Plane,
    /// Flat torus `[-L, L]^2` with half edge length `L`.
    Torus { half_edge: f64 },
}

impl Domain {
    pub fn half_edge(&self) -> Option<f64> {
        match self {
            Domain::Plane => None,
            Domain::Torus { half_edge } => Some(*half_edge),
        }
    }
}

/// Band-limited radial function over a pole, plus its length scale `R`
/// (the radius of the disk with the target enclosed area).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialCurve {
    radius: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    pole: [f64; 2],
    domain: Domain,
}

impl RadialCurve {
    /// Validates mode count, positivity at the nodes and the torus fit.
    pub fn new(radius: f64, cos: Vec<f64>, sin: Vec<f64>, pole: [f64; 2], domain: Domain) -> Result<Self> {
        let n = cos.len();
        if sin.len() != n {
            return Err(Error::InvalidCurve("cos/sin length mismatch".into()));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidCurve(format!("mode count {n} must be a power of two >= 16")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidCurve(format!("length scale {radius} must be positive")));
        }
        if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidCurve("non-finite coefficient".into()));
        }
        let mut sin = sin;
        sin[0] = 0.0;
        let curve = RadialCurve { radius, cos, sin, pole, domain };
        let rho = curve.node_values();
        if let Some((node, &value)) = rho.iter().enumerate().find(|(_, r)| **r <= 0.0) {
            return Err(Error::NonPositiveRadius { node, value });
        }
        if let Domain::Torus { half_edge } = domain {
            let extent = rho.iter().cloned().fold(0.0, f64::max) + pole[0].abs().max(pole[1].abs());
            if extent >= half_edge {
                return Err(Error::OutsideCell { extent, half_edge });
            }
        }
        Ok(curve)
    }

    pub fn circle(radius: f64, n_modes: usize, domain: Domain) -> Result<Self> {
        let mut cos = vec![0.0; n_modes];
        cos[0] = radius;
        Self::new(radius, cos, vec![0.0; n_modes], [0.0, 0.0], domain)
    }

    /// `R + sum_j amp_j cos(k_j (phi - phase_j))`.
    pub fn from_modes(radius: f64, n_modes: usize, modes: &[(usize, f64, f64)], domain: Domain) -> Result<Self> {
        let mut cos = vec![0.0; n_modes];
        let mut sin = vec![0.0; n_modes];
        cos[0] = radius;
        for &(k, amp, phase) in modes {
            if k == 0 || k >= n_modes {
                return Err(Error::InvalidCurve(format!("mode {k} outside 1..{n_modes}")));
            }
            let kp = k as f64 * phase;
            cos[k] += amp * kp.cos();
            sin[k] += amp * kp.sin();
        }
        Self::new(radius, cos, sin, [0.0, 0.0], domain)
    }

    /// Samples `f` on the `2N` grid and keeps the first `N` modes.
    pub fn from_fn(radius: f64, n_modes: usize, pole: [f64; 2], domain: Domain, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = spectral::nodes(2 * n_modes).into_iter().map(f).collect();
        let (cos, sin) = spectral::analyze(&values, n_modes);
        Self::new(radius, cos, sin, pole, domain)
    }

    /// Unit-area-scale disk of radius `radius` whose center sits at
    /// `(a, 0)` relative to the pole.
    pub fn shifted_disk(radius: f64, a: f64, n_modes: usize, pole: [f64; 2], domain: Domain) -> Result<Self> {
        Self::from_fn(radius, n_modes, pole, domain, |phi| {
            a * phi.cos() + (radius * radius - a * a * phi.sin().powi(2)).sqrt()
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn cos(&self) -> &[f64] {
        &self.cos
    }
    pub fn sin(&self) -> &[f64] {
        &self.sin
    }
    pub fn pole(&self) -> [f64; 2] {
        self.pole
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn n_modes(&self) -> usize {
        self.cos.len()
    }
    pub fn n_nodes(&self) -> usize {
        2 * self.cos.len()
    }

    /// Amplitude `sqrt(a_k^2 + b_k^2)` of mode `k`.
    pub fn amplitude(&self, k: usize) -> f64 {
        self.cos[k].hypot(self.sin[k])
    }

    pub fn node_values(&self) -> Vec<f64> {
        spectral::synthesize(&self.cos, &self.sin, self.n_nodes())
    }

    /// `(rho, rho_phi, rho_phiphi)` at an arbitrary angle.
    pub fn evaluate(&self, phi: f64) -> (f64, f64, f64) {
        spectral::eval(&self.cos, &self.sin, phi)
    }

    /// Top-mode amplitude relative to the largest coefficient.
    pub fn resolution_ratio(&self) -> f64 {
        let max = (0..self.n_modes()).map(|k| self.amplitude(k)).fold(0.0, f64::max);
        self.amplitude(self.n_modes() - 1) / max
    }

    /// Same curve with a different pole and coefficients.
    pub fn with_coefficients(&self, cos: Vec<f64>, sin: Vec<f64>, pole: [f64; 2]) -> Result<Self> {
        Self::new(self.radius, cos, sin, pole, self.domain)
    }

    /// Resets the zero mode so that the enclosed area is `pi R^2`.
    pub fn with_target_area(&self) -> Result<Self> {
        let rest: f64 = (1..self.n_modes()).map(|k| self.cos[k].powi(2) + self.sin[k].powi(2)).sum();
        let s = self.radius * self.radius - 0.5 * rest;
        if s <= 0.0 {
            return Err(Error::InvalidCurve("perturbation too large for the target area".into()));
        }
        let mut cos = self.cos.clone();
        cos[0] = s.sqrt();
        self.with_coefficients(cos, self.sin.clone(), self.pole)
    }

    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::new(self.radius, self.cos.clone(), self.sin.clone(), self.pole, domain)
    }

    /// Dilation by `lambda` about the origin (pole and all lengths scale).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let domain = match self.domain {
            Domain::Plane => Domain::Plane,
            Domain::Torus { half_edge } => Domain::Torus { half_edge: lambda * half_edge },
        };
        Self::new(
            lambda * self.radius,
            self.cos.iter().map(|c| lambda * c).collect(),
            self.sin.iter().map(|c| lambda * c).collect(),
            [lambda * self.pole[0], lambda * self.pole[1]],
            domain,
        )
    }

    /// Serializes to the `msrc v1` text format.
    pub fn to_msrc(&self) -> String {
        let mut s = String::new();
        let domain = match self.domain {
            Domain::Plane => "plane".to_string(),
            Domain::Torus { half_edge } => format!("torus {half_edge:.17e}"),
        };
        writeln!(
            s,
            "msrc v1 {} {:.17e} {} {:.17e} {:.17e}",
            self.n_modes(),
            self.radius,
            domain,
            self.pole[0],
            self.pole[1]
        )
        .unwrap();
        for k in 0..self.n_modes() {
            writeln!(s, "{:.17e} {:.17e}", self.cos[k], self.sin[k]).unwrap();
        }
        s
    }

    pub fn from_msrc(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty curve file".into()))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() < 6 || tok[0] != "msrc" || tok[1] != "v1" {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let n: usize = tok[2].parse().map_err(|e| Error::Parse(format!("mode count: {e}")))?;
        let radius = num(tok[3])?;
        let (domain, rest) = match tok[4] {
            "plane" => (Domain::Plane, &tok[5..]),
            "torus" => {
                let l = num(tok.get(5).ok_or_else(|| Error::Parse("missing L".into()))?)?;
                (Domain::Torus { half_edge: l }, &tok[6..])
            }
            other => return Err(Error::Parse(format!("unknown domain {other}"))),
        };
        if rest.len() != 2 {
            return Err(Error::Parse("header must end with pole_x pole_y".into()));
        }
        let pole = [num(rest[0])?, num(rest[1])?];
        let mut cos = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        for line in lines.by_ref().take(n) {
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("bad coefficient line: {line}")));
            };
            cos.push(num(a)?);
            sin.push(num(b)?);
        }
        if cos.len() != n {
            return Err(Error::Parse(format!("expected {n} coefficient lines, found {}", cos.len())));
        }
        Self::new(radius, cos, sin, pole, domain)
    }
}

/// What to do when the top mode carries too much of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionPolicy {
    /// Abort threshold on [`RadialCurve::resolution_ratio`].
    pub abort_ratio: f64,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        ResolutionPolicy { abort_ratio: 1e-8 }
    }
}

/// Ratio above which a curve is flagged as marginally resolved.
pub const RESOLUTION_WARN_RATIO: f64 = 1e-13;

/// Node-wise geometry of a curve on the `M = 2N` grid.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    pub curve: RadialCurve,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_phi: Vec<f64>,
    pub rho_phiphi: Vec<f64>,
    pub ell: Vec<f64>,
    pub kappa: Vec<f64>,
    pub tangent: Vec<[f64; 2]>,
    pub normal: Vec<[f64; 2]>,
    pub omega: Vec<f64>,
    pub points: Vec<[f64; 2]>,
}

impl GeometryCache {
    pub fn n_nodes(&self) -> usize {
        self.phi.len()
    }

    /// Quadrature weight `2 pi / M`.
    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.n_nodes() as f64
    }

    /// Arc-length quadrature of node values, `int f ds`.
    pub fn integrate_ds(&self, f: &[f64]) -> f64 {
        self.dphi() * f.iter().zip(&self.ell).map(|(a, l)| a * l).sum::<f64>()
    }

    /// Arc-length mean curvature, `2 pi / L` up to quadrature.
    pub fn mean_curvature(&self) -> f64 {
        self.integrate_ds(&self.kappa) / perimeter(self)
    }
}

pub fn build_cache(curve: &RadialCurve) -> Result<GeometryCache> {
    build_cache_with(curve, &ResolutionPolicy::default())
}

pub fn build_cache_with(curve: &RadialCurve, policy: &ResolutionPolicy) -> Result<GeometryCache> {
    let ratio = curve.resolution_ratio();
    if ratio > policy.abort_ratio {
        return Err(Error::Unresolved { ratio, threshold: policy.abort_ratio });
    }
    let m = curve.n_nodes();
    let n = curve.n_modes();
    let phi = spectral::nodes(m);
    let rho = curve.node_values();
    if let Some((node, &value)) = rho.iter().enumerate().find(|(_, r)| **r <= 0.0) {
        return Err(Error::NonPositiveRadius { node, value });
    }
    let dcos: Vec<f64> = (0..n).map(|k| k as f64 * curve.sin[k]).collect();
    let dsin: Vec<f64> = (0..n).map(|k| -(k as f64) * curve.cos[k]).collect();
    let d2cos: Vec<f64> = (0..n).map(|k| -((k * k) as f64) * curve.cos[k]).collect();
    let d2sin: Vec<f64> = (0..n).map(|k| -((k * k) as f64) * curve.sin[k]).collect();
    let rho_phi = spectral::synthesize(&dcos, &dsin, m);
    let rho_phiphi = spectral::synthesize(&d2cos, &d2sin, m);

    let mut ell = Vec::with_capacity(m);
    let mut kappa = Vec::with_capacity(m);
    let mut tangent = Vec::with_capacity(m);
    let mut normal = Vec::with_capacity(m);
    let mut omega = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m);
    for j in 0..m {
        let (r, rp, rpp) = (rho[j], rho_phi[j], rho_phiphi[j]);
        let l = r.hypot(rp);
        let (s, c) = phi[j].sin_cos();
        let er = [c, s];
        let et = [-s, c];
        ell.push(l);
        kappa.push((rp * rp - r * rpp) / (l * l * l) + 1.0 / l);
        tangent.push([(rp * er[0] + r * et[0]) / l, (rp * er[1] + r * et[1]) / l]);
        normal.push([(r * er[0] - rp * et[0]) / l, (r * er[1] - rp * et[1]) / l]);
        omega.push(rp.atan2(r));
        points.push([curve.pole[0] + r * c, curve.pole[1] + r * s]);
    }
    Ok(GeometryCache {
        curve: curve.clone(),
        phi,
        rho,
        rho_phi,
        rho_phiphi,
        ell,
        kappa,
        tangent,
        normal,
        omega,
        points,
    })
}

/// Curve length `int ell dphi`.
pub fn perimeter(cache: &GeometryCache) -> f64 {
    cache.dphi() * cache.ell.iter().sum::<f64>()
}

/// `(1/2) int rho^2 dphi`, exact for band-limited `rho` on the `2N` grid.
pub fn enclosed_area(cache: &GeometryCache) -> f64 {
    0.5 * cache.dphi() * cache.rho.iter().map(|r| r * r).sum::<f64>()
}

/// Radius of the disk with the same enclosed area.
pub fn equal_area_radius(curve: &RadialCurve) -> f64 {
    let a0 = curve.cos[0];
    let rest: f64 = (1..curve.n_modes()).map(|k| curve.cos[k].powi(2) + curve.sin[k].powi(2)).sum();
    (a0 * a0 + 0.5 * rest).sqrt()
}

/// Isoperimetric deficit `L(Gamma) - 2 pi r_A` with `r_A` the equal-area
/// radius, evaluated without cancellation:
/// `int rho_phi^2/(ell + rho) dphi + 2 pi (a_0 - r_A)`.
pub fn energy_gap(cache: &GeometryCache) -> f64 {
    let curve = &cache.curve;
    let slope_part: f64 = cache
        .rho_phi
        .iter()
        .zip(cache.ell.iter().zip(&cache.rho))
        .map(|(rp, (l, r))| rp * rp / (l + r))
        .sum::<f64>()
        * cache.dphi();
    let a0 = curve.cos[0];
    let rest: f64 = (1..curve.n_modes()).map(|k| curve.cos[k].powi(2) + curve.sin[k].powi(2)).sum();
    let r_a = (a0 * a0 + 0.5 * rest).sqrt();
    // a0 - r_A = -(rest/2) / (a0 + r_A)
    slope_part - 2.0 * PI * 0.5 * rest / (a0 + r_a)
}

fn fine_rho(cache: &GeometryCache) -> Vec<f64> {
    spectral::upsample(&cache.rho, 2 * cache.n_nodes())
}

/// `int rho^3 (cos, sin) dphi`; exact on the doubled grid.
pub fn cubed_radius_moment(cache: &GeometryCache) -> [f64; 2] {
    let rho = fine_rho(cache);
    let m = rho.len();
    let w = 2.0 * PI / m as f64;
    let mut acc = [0.0; 2];
    for (j, r) in rho.iter().enumerate() {
        let (s, c) = (2.0 * PI * j as f64 / m as f64).sin_cos();
        let r3 = r * r * r;
        acc[0] += w * r3 * c;
        acc[1] += w * r3 * s;
    }
    acc
}

/// Area barycenter via the cubed-radius integrals.
pub fn barycenter_bulk(cache: &GeometryCache) -> [f64; 2] {
    let area = enclosed_area(cache);
    let mom = cubed_radius_moment(cache);
    let pole = cache.curve.pole;
    [pole[0] + mom[0] / (3.0 * area), pole[1] + mom[1] / (3.0 * area)]
}

/// Arc-length barycenter of the boundary curve.
pub fn barycenter_boundary(cache: &GeometryCache) -> [f64; 2] {
    let len = perimeter(cache);
    let xs: Vec<f64> = cache.points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = cache.points.iter().map(|p| p[1]).collect();
    [cache.integrate_ds(&xs) / len, cache.integrate_ds(&ys) / len]
}

/// Residual of `c - pole = L/(3|Omega|) (c_boundary - pole)`.
///
/// The identity holds when both barycenters coincide with the pole (e.g. for
/// shapes with a rotational symmetry about it) but not in general: for a disk
/// displaced by `a` from the pole the residual is `a/3`.
pub fn barycenter_equivalence_residual(cache: &GeometryCache) -> f64 {
    let c = barycenter_bulk(cache);
    let cb = barycenter_boundary(cache);
    let pole = cache.curve.pole;
    let factor = perimeter(cache) / (3.0 * enclosed_area(cache));
    let rx = (c[0] - pole[0]) - factor * (cb[0] - pole[0]);
    let ry = (c[1] - pole[1]) - factor * (cb[1] - pole[1]);
    rx.hypot(ry)
}

/// Residuals of the four nearly-circular conditions, scaled by `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub delta: f64,
    /// `sup |rho - R| / R`
    pub annulus: f64,
    /// `sup |rho_phi| / R`
    pub slope: f64,
    /// `|c - pole| / R`
    pub barycenter: f64,
    /// `| |Omega| - pi R^2 | / (pi R^2)`
    pub area: f64,
    pub annulus_ok: bool,
    pub slope_ok: bool,
    pub barycenter_ok: bool,
    pub area_ok: bool,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.annulus_ok && self.slope_ok && self.barycenter_ok && self.area_ok
    }
}

/// Tolerances for the two equality conditions.
pub const BARYCENTER_TOL: f64 = 1e-8;
pub const AREA_TOL: f64 = 1e-9;

pub fn admissibility_report(curve: &RadialCurve, delta: f64) -> Result<AdmissibilityReport> {
    let cache = build_cache(curve)?;
    Ok(admissibility_from_cache(&cache, delta))
}

pub fn admissibility_from_cache(cache: &GeometryCache, delta: f64) -> AdmissibilityReport {
    let r = cache.curve.radius;
    let fine = fine_rho(cache);
    let fine_slope = spectral::upsample(&cache.rho_phi, fine.len());
    let annulus = fine.iter().map(|x| (x - r).abs()).fold(0.0, f64::max) / r;
    let slope = fine_slope.iter().map(|x| x.abs()).fold(0.0, f64::max) / r;
    let c = barycenter_bulk(cache);
    let pole = cache.curve.pole;
    let barycenter = (c[0] - pole[0]).hypot(c[1] - pole[1]) / r;
    let target = PI * r * r;
    let area = (enclosed_area(cache) - target).abs() / target;
    AdmissibilityReport {
        delta,
        annulus,
        slope,
        barycenter,
        area,
        annulus_ok: annulus <= delta,
        slope_ok: slope <= delta,
        barycenter_ok: barycenter <= BARYCENTER_TOL,
        area_ok: area <= AREA_TOL,
    }
}

/// Annulus monitor for the Bonnesen-type bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BonnesenMonitor {
    pub center: [f64; 2],
    pub r_out: f64,
    pub r_in: f64,
    /// `pi^2 (R_out - R_in)^2`
    pub lhs: f64,
    /// `L^2 - (2 pi R)^2`
    pub rhs: f64,
}

/// Minimizes the containing-annulus width over its center by a
/// Nelder-Mead search started at the bulk barycenter.
pub fn bonnesen_monitor(cache: &GeometryCache) -> Result<BonnesenMonitor> {
    let m_fine = 8 * cache.n_nodes();
    let rho = spectral::upsample(&cache.rho, m_fine);
    let pole = cache.curve.pole;
    let pts: Vec<[f64; 2]> = rho
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let (s, c) = (2.0 * PI * j as f64 / m_fine as f64).sin_cos();
            [pole[0] + r * c, pole[1] + r * s]
        })
        .collect();
    let radii = |c: [f64; 2]| {
        pts.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
            let d = (p[0] - c[0]).hypot(p[1] - c[1]);
            (lo.min(d), hi.max(d))
        })
    };
    let width = |c: [f64; 2]| {
        let (lo, hi) = radii(c);
        hi - lo
    };
    let start = barycenter_bulk(cache);
    let scale = cache.curve.radius;
    let center = nelder_mead_2d(width, start, 0.05 * scale, 1e-14 * scale, 2000).ok_or(Error::OptimFail)?;
    if (center[0] - start[0]).hypot(center[1] - start[1]) > scale {
        return Err(Error::OptimFail);
    }
    let (r_in, r_out) = radii(center);
    let len = perimeter(cache);
    let r = cache.curve.radius;
    Ok(BonnesenMonitor {
        center,
        r_out,
        r_in,
        lhs: PI * PI * (r_out - r_in).powi(2),
        rhs: len * len - (2.0 * PI * r).powi(2),
    })
}

fn nelder_mead_2d(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: f64, tol: f64, max_iter: usize) -> Option<[f64; 2]> {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = simplex.map(&f);
    for _ in 0..max_iter {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        if vals.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let size = (simplex[1][0] - simplex[0][0]).hypot(simplex[1][1] - simplex[0][1])
            + (simplex[2][0] - simplex[0][0]).hypot(simplex[2][1] - simplex[0][1]);
        if size < tol {
            break;
        }
        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = if fr < vals[2] { along(-0.5) } else { along(0.5) };
            let fc = f(xc);
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        (simplex[i][0] + simplex[0][0]) / 2.0,
                        (simplex[i][1] + simplex[0][1]) / 2.0,
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    Some(simplex[0])
}

/// Random smooth star shape `R (1 + sum_k c_k cos(k phi - theta_k))` with
/// modes `2..=k_max` and coefficient envelope `k^-2`, rescaled so that
/// `sup|rho - R|` and `sup|rho_phi|` stay below `fill * delta * R`.
pub fn random_star_shape<G: Rng>(
    rng: &mut G,
    radius: f64,
    n_modes: usize,
    k_max: usize,
    delta: f64,
    fill: f64,
) -> Result<RadialCurve> {
    let mut modes = Vec::new();
    for k in 2..=k_max.min(n_modes - 1) {
        let amp: f64 = rng.gen_range(-1.0..1.0) / (k * k) as f64;
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        modes.push((k, amp, phase));
    }
    let probe = RadialCurve::from_modes(1.0, n_modes, &modes, Domain::Plane)?;
    let cache = build_cache(&probe)?;
    let rep = admissibility_from_cache(&cache, 1.0);
    let worst = rep.annulus.max(rep.slope).max(1e-300);
    let target = fill * delta;
    let scale = target / worst;
    let scaled: Vec<(usize, f64, f64)> = modes.iter().map(|&(k, a, p)| (k, a * scale * radius, p)).collect();
    RadialCurve::from_modes(radius, n_modes, &scaled, Domain::Plane)
}
